//! Noise level at which sub-Poissonian counts turn super-Poissonian, and a
//! demonstration that the Mandel Q parameter actually flips sign there.

use photocount::model::NoiseModel;
use photocount::states::{fock_pmf, moments};
use photocount::statistics::{mandel_q, noise_threshold, ThresholdOutcome};
use photocount::DetectorConfig;

fn main() -> photocount::Result<()> {
    let eta = 0.9;
    println!("critical noise count for fock |n> at eta = {eta}");
    println!("{:>3}  {:>8}  {:>12}  {:>12}  {:>12}", "n", "modes", "n_noise*", "Q at 0.9x", "Q at 1.1x");
    for n in [1usize, 2, 5] {
        let mo = moments(&fock_pmf(n));
        for modes in [1u64, 4, 100] {
            let ThresholdOutcome::Critical(n_star) = noise_threshold(&mo, eta, modes)? else {
                continue;
            };
            let q = |n_noise: f64| {
                let d = DetectorConfig::new(eta, NoiseModel::FiniteModes { n_noise, modes })?;
                mandel_q(&mo, &d)
            };
            println!(
                "{n:>3}  {modes:>8}  {n_star:>12.8}  {:>12.3e}  {:>12.3e}",
                q(0.9 * n_star)?,
                q(1.1 * n_star)?
            );
        }
    }

    let coherent = photocount::states::coherent_pmf_auto(2.0)?;
    match noise_threshold(&moments(&coherent), eta, 2)? {
        ThresholdOutcome::AlreadySuperPoissonian => {
            println!("\ncoherent light: no threshold, counts are never sub-Poissonian");
        }
        ThresholdOutcome::Critical(v) => println!("\ncoherent light: unexpected threshold {v}"),
    }
    Ok(())
}
