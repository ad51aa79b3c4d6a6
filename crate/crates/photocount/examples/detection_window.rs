//! From detector bandwidth and gate time to the effective noise-mode count,
//! and when the convenient Poissonian limit is actually trustworthy.

use photocount::model::{
    critical_detection_time, estimate_mode_count, poisson_limit_applicable, BathSpec, NoiseModel,
    DEFAULT_POISSON_LIMIT_TOLERANCE,
};

fn main() -> photocount::Result<()> {
    let bandwidth = 1e15; // rad/s, broadband background
    println!("bandwidth {bandwidth:.1e} rad/s");
    println!("{:>10}  {:>12}  {:>22}", "gate", "modes", "Poissonian ok (N=0.5)?");
    for time in [1e-13, 1e-11, 1e-9] {
        let modes = estimate_mode_count(&BathSpec::new(bandwidth, time)?)?;
        let noise = NoiseModel::FiniteModes { n_noise: 0.5, modes };
        let ok = poisson_limit_applicable(&noise, DEFAULT_POISSON_LIMIT_TOLERANCE);
        println!("{time:>10.0e}  {modes:>12}  {ok:>22}");
    }

    let t_star = critical_detection_time(0.5, bandwidth)?;
    println!("\nbelow T = {t_star:.2e} s the window holds a single noise mode");
    Ok(())
}
