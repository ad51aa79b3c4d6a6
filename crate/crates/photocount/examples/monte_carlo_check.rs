//! Semiclassical Monte Carlo of the detection model against the analytic
//! count probabilities: per-bin comparison and total-variation distance.

use photocount::model::NoiseModel;
use photocount::oracle::mc_sample_counts;
use photocount::povm::povm_symbol;
use photocount::{DetectorConfig, SignalAmplitudes};

fn main() -> photocount::Result<()> {
    let detector = DetectorConfig::new(0.6, NoiseModel::FiniteModes { n_noise: 0.5, modes: 2 })?;
    let signal = SignalAmplitudes::with_intensity(1.0)?;
    let samples = 200_000;

    let hist = mc_sample_counts(&signal, &detector, samples, 42)?;
    let empirical = hist.empirical_pmf();

    println!("{:>3}  {:>11}  {:>11}  {:>8}", "m", "analytic", "sampled", "pull");
    let mut tv = 0.0;
    for (m, &p_hat) in empirical.iter().enumerate() {
        let p = povm_symbol(m as u32, &signal, &detector);
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        tv += 0.5 * (p_hat - p).abs();
        if p > 1e-5 {
            println!("{m:>3}  {p:>11.6}  {p_hat:>11.6}  {:>8.2}", (p_hat - p) / se);
        }
    }
    println!("total variation distance: {tv:.5}");
    Ok(())
}
