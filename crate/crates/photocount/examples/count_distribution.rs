//! Forward pipeline: a coherent signal seen through a lossy detector with
//! thermal noise, in both noise regimes side by side.

use photocount::model::NoiseModel;
use photocount::states::{coherent_pmf_auto, moments};
use photocount::statistics::{count_distribution, suggested_m_max};
use photocount::DetectorConfig;

fn main() -> photocount::Result<()> {
    let state = coherent_pmf_auto(2.0)?;
    let poissonian = DetectorConfig::new(0.5, NoiseModel::PoissonianLimit { n_noise: 1.0 })?;
    let finite = DetectorConfig::new(0.5, NoiseModel::FiniteModes { n_noise: 1.0, modes: 2 })?;

    let m_max = suggested_m_max(&moments(&state), &finite);
    let p_inf = count_distribution(&state, &poissonian, m_max)?;
    let p_fin = count_distribution(&state, &finite, m_max)?;

    println!("coherent |alpha|^2 = 2 through eta = 0.5, n_noise = 1");
    println!("{:>3}  {:>13}  {:>13}", "m", "mu -> inf", "mu = 2");
    for m in 0..=12 {
        println!("{m:>3}  {:>13.6e}  {:>13.6e}", p_inf.pmf[m], p_fin.pmf[m]);
    }
    println!("tail bounds: {:.2e} / {:.2e}", p_inf.tail_bound, p_fin.tail_bound);
    Ok(())
}
