//! Round trips through the two exact inverses: forward a known state, add
//! nothing, invert, and measure how well the input comes back.

use photocount::inversion::{invert_lossy_with, invert_unit_efficiency_with, InversionConfig};
use photocount::model::NoiseModel;
use photocount::states::{coherent_pmf, fock_pmf};
use photocount::statistics::count_distribution;
use photocount::DetectorConfig;

fn main() -> photocount::Result<()> {
    let config = InversionConfig::default();

    // Binomial loss channel.
    let state = coherent_pmf(2.0, 60)?;
    let lossy = DetectorConfig::new(0.5, NoiseModel::PoissonianLimit { n_noise: 0.0 })?;
    let counts = count_distribution(&state, &lossy, 40)?;
    let report = invert_lossy_with(&counts, 0.5, &config)?;
    let err = report
        .statistics
        .pmf()
        .iter()
        .zip(state.pmf())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("lossy inverse, coherent S = 2 through eta = 0.5:");
    println!("  growth exponent {:.1}, max recovery error {err:.2e}", report.condition);

    // Unit-efficiency noisy channel.
    let state = fock_pmf(2);
    let noisy = DetectorConfig::new(1.0, NoiseModel::PoissonianLimit { n_noise: 0.3 })?;
    let counts = count_distribution(&state, &noisy, 25)?;
    let report = invert_unit_efficiency_with(&counts, 0.3, &config)?;
    println!("unit-efficiency inverse, fock |2> with n_noise = 0.3:");
    println!("  condition {:.3}, recovered p_2 = {:.12}", report.condition, report.statistics.pmf()[2]);

    // The refusal path: a channel too lossy to invert at this extent.
    let counts = count_distribution(&coherent_pmf(1.0, 40)?, &DetectorConfig::new(0.1, NoiseModel::PoissonianLimit { n_noise: 0.0 })?, 40)?;
    match invert_lossy_with(&counts, 0.1, &config) {
        Err(e) => println!("eta = 0.1 at m_max = 40 refused as expected: {e}"),
        Ok(_) => println!("unexpectedly succeeded"),
    }
    Ok(())
}
