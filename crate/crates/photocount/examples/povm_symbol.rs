//! Husimi symbol of the count-n POVM element over a range of signal
//! intensities, showing how noise smears the ideal Poisson ridge.

use photocount::model::NoiseModel;
use photocount::povm::povm_symbol;
use photocount::{DetectorConfig, SignalAmplitudes};

fn main() -> photocount::Result<()> {
    let ideal = DetectorConfig::new(1.0, NoiseModel::PoissonianLimit { n_noise: 0.0 })?;
    let noisy = DetectorConfig::new(0.6, NoiseModel::FiniteModes { n_noise: 0.5, modes: 2 })?;

    println!("P(n = 3 | coherent signal), ideal vs eta = 0.6 with noise");
    println!("{:>6}  {:>12}  {:>12}", "S", "ideal", "noisy");
    for i in 0..=16 {
        let s = 0.5 * i as f64;
        let signal = SignalAmplitudes::with_intensity(s)?;
        let a = povm_symbol(3, &signal, &ideal);
        let b = povm_symbol(3, &signal, &noisy);
        println!("{s:>6.2}  {a:>12.6}  {b:>12.6}");
    }
    Ok(())
}
