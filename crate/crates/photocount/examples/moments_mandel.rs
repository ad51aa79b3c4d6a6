//! Closed-form count moments against the moments of the actual pmf, plus
//! the Mandel Q parameter across noise regimes.

use photocount::model::NoiseModel;
use photocount::states::{fock_pmf, moments};
use photocount::statistics::{
    count_distribution, count_mean, count_variance, mandel_q, suggested_m_max,
};
use photocount::DetectorConfig;

fn main() -> photocount::Result<()> {
    let state = fock_pmf(2);
    let mo = moments(&state);

    for (label, detector) in [
        ("eta 0.7, Poissonian n_noise 0.5", DetectorConfig::new(0.7, NoiseModel::PoissonianLimit { n_noise: 0.5 })?),
        ("eta 0.7, 2-mode n_noise 0.5", DetectorConfig::new(0.7, NoiseModel::FiniteModes { n_noise: 0.5, modes: 2 })?),
    ] {
        let counts = count_distribution(&state, &detector, suggested_m_max(&mo, &detector))?;
        println!("fock |2>, {label}");
        println!("  mean:     closed form {:.12}, pmf {:.12}", count_mean(&mo, &detector), counts.mean());
        println!("  variance: closed form {:.12}, pmf {:.12}", count_variance(&mo, &detector), counts.variance());
        println!("  Mandel Q: {:.12}", mandel_q(&mo, &detector)?);
    }
    Ok(())
}
