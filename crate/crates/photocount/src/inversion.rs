//! Recovering photon-number statistics from noisy count statistics: the
//! two exact inverses (pure loss, and unit efficiency with Poissonian
//! noise) plus a truncated least-squares fallback for the general channel.
//!
//! Both exact inverses are alternating sums whose terms grow
//! exponentially, so each refuses to run past a conditioning bound rather
//! than return plausible-looking noise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::DetectorConfig;
use crate::povm::cond_matrix;
use crate::specfun::{log_binomial, Neumaier};
use crate::states::PhotonStatistics;
use crate::statistics::CountDistribution;

#[derive(Debug, Clone)]
pub struct InversionConfig {
    /// Cap on kappa = (1/eta - 1) * m_max, the growth exponent of the
    /// binomial inverse's alternating terms.
    pub lossy_condition_bound: f64,
    /// Cap on the noise mean in the unit-efficiency inverse.
    pub unit_eff_noise_bound: f64,
    /// Cap on the singular-value ratio in the least-squares inverse.
    pub general_condition_bound: f64,
    /// Outputs in [-tol, 0) are clipped to zero; anything below -tol, or a
    /// clipped total above tol, is treated as failure.
    pub negativity_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            lossy_condition_bound: 200.0,
            unit_eff_noise_bound: 30.0,
            general_condition_bound: 1e8,
            negativity_tol: 1e-6,
        }
    }
}

/// An inversion result with its honesty metadata: the conditioning
/// indicator that was checked, the total negative mass clipped away, and
/// (for the least-squares route) the residual norm.
#[derive(Debug, Clone)]
pub struct InversionReport {
    pub statistics: PhotonStatistics,
    pub condition: f64,
    pub clipped: f64,
    pub residual: Option<f64>,
}

fn check_normalized(counts: &CountDistribution) -> Result<()> {
    counts.validate()?;
    let total = counts.total_mass() + counts.tail_bound;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "counts must be normalized within 1e-9, got total mass {total}"
        )));
    }
    Ok(())
}

/// Clips small negative entries to zero and packages the result. Anything
/// below `-tol` means the inverse has amplified noise past the point of
/// usefulness.
fn package(values: Vec<f64>, condition: f64, residual: Option<f64>, tol: f64) -> Result<InversionReport> {
    let mut clipped = 0.0;
    let mut pmf = Vec::with_capacity(values.len());
    for (n, v) in values.into_iter().enumerate() {
        if v < -tol {
            return Err(Error::Negativity(format!(
                "recovered p_{n} = {v:.3e} below -{tol:.1e}; input noise exceeds what this inverse can bear"
            )));
        }
        if v < 0.0 {
            clipped -= v;
            pmf.push(0.0);
        } else {
            pmf.push(v);
        }
    }
    if clipped > tol {
        return Err(Error::Negativity(format!(
            "clipped negative mass {clipped:.3e} exceeds {tol:.1e}"
        )));
    }
    Ok(InversionReport { statistics: PhotonStatistics::new(pmf, 0.0)?, condition, clipped, residual })
}

/// Inverse of the binomial loss channel:
/// `p_n = sum_{m>=n} C(m,n) eta^(-n) (1 - 1/eta)^(m-n) P_m`,
/// truncated at the counts' extent.
pub fn invert_lossy_with(
    counts: &CountDistribution,
    efficiency: f64,
    config: &InversionConfig,
) -> Result<InversionReport> {
    if !efficiency.is_finite() || efficiency <= 0.0 || efficiency > 1.0 {
        return Err(Error::Validation(format!(
            "efficiency must lie in (0, 1], got {efficiency}"
        )));
    }
    check_normalized(counts)?;
    let m_max = counts.pmf.len() - 1;
    let kappa = (1.0 / efficiency - 1.0) * m_max as f64;
    if kappa > config.lossy_condition_bound {
        return Err(Error::IllConditioned(format!(
            "binomial inverse growth exponent {kappa:.1} exceeds bound {:.1}; reduce the count extent or raise the bound",
            config.lossy_condition_bound
        )));
    }
    let ln_eta = efficiency.ln();
    let x = 1.0 / efficiency - 1.0;
    let values: Vec<f64> = (0..=m_max)
        .map(|n| {
            let mut acc = Neumaier::default();
            for m in n..=m_max {
                let ln_coef = log_binomial(m as u64, n as i64).log_magnitude()
                    - n as f64 * ln_eta
                    + if m > n { (m - n) as f64 * x.ln() } else { 0.0 };
                let sign = if (m - n) % 2 == 1 { -1.0 } else { 1.0 };
                acc.add(sign * ln_coef.exp() * counts.pmf[m]);
            }
            acc.total()
        })
        .collect();
    package(values, kappa, None, config.negativity_tol)
}

pub fn invert_lossy(counts: &CountDistribution, efficiency: f64) -> Result<PhotonStatistics> {
    Ok(invert_lossy_with(counts, efficiency, &InversionConfig::default())?.statistics)
}

/// Inverse of the unit-efficiency noisy channel (shifted Poisson):
/// `p_n = e^(n_noise) sum_{m<=n} (-n_noise)^(n-m)/(n-m)! P_m`.
pub fn invert_unit_efficiency_with(
    counts: &CountDistribution,
    n_noise: f64,
    config: &InversionConfig,
) -> Result<InversionReport> {
    if !n_noise.is_finite() || n_noise < 0.0 {
        return Err(Error::Validation(format!("noise mean must be nonnegative, got {n_noise}")));
    }
    check_normalized(counts)?;
    if n_noise > config.unit_eff_noise_bound {
        return Err(Error::IllConditioned(format!(
            "noise mean {n_noise} exceeds bound {}; the alternating inverse loses all precision",
            config.unit_eff_noise_bound
        )));
    }
    let m_max = counts.pmf.len() - 1;
    let scale = n_noise.exp();
    // coefs[d] = (-n_noise)^d / d!; the conditioning indicator is the
    // largest coefficient magnitude after the e^(n_noise) prefactor.
    let mut coefs = vec![0.0; m_max + 1];
    let mut condition: f64 = scale;
    coefs[0] = 1.0;
    for d in 1..=m_max {
        coefs[d] = coefs[d - 1] * (-n_noise) / d as f64;
        condition = condition.max(scale * coefs[d].abs());
    }
    let values: Vec<f64> = (0..=m_max)
        .map(|n| {
            let mut acc = Neumaier::default();
            for m in 0..=n {
                acc.add(coefs[n - m] * counts.pmf[m]);
            }
            scale * acc.total()
        })
        .collect();
    package(values, condition, None, config.negativity_tol)
}

pub fn invert_unit_efficiency(counts: &CountDistribution, n_noise: f64) -> Result<PhotonStatistics> {
    Ok(invert_unit_efficiency_with(counts, n_noise, &InversionConfig::default())?.statistics)
}

/// Least-squares solve on the conditional-matrix subblock; returns the
/// minimal-norm solution of min ||A x - b||.
fn svd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-14).expect("svd requested with both factors")
}

/// Lawson-Hanson active-set nonnegative least squares.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let ncols = a.ncols();
    let mut x = DVector::zeros(ncols);
    let mut passive = vec![false; ncols];
    let tol = 1e-12 * a.amax().max(1.0);
    for _ in 0..3 * ncols.max(8) {
        let w = a.transpose() * (b - a * &x);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if !passive[j] && w[j] > tol && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;
        loop {
            let idx: Vec<usize> = (0..ncols).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&idx);
            let z = svd_solve(&sub, b);
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (pos, &j) in idx.iter().enumerate() {
                    x[j] = z[pos];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (pos, &j) in idx.iter().enumerate() {
                if z[pos] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[pos]));
                }
            }
            for (pos, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[pos] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// General numerical deconvolution through the truncated conditional
/// matrix: min ||A p - P|| with optional p >= 0 and total mass <= 1.
/// Plumbing for the channels with no exact inverse; the residual is always
/// reported, never hidden.
pub fn invert_general_with(
    counts: &CountDistribution,
    detector: &DetectorConfig,
    n_max: usize,
    nonneg: bool,
    config: &InversionConfig,
) -> Result<InversionReport> {
    check_normalized(counts)?;
    let m_max = counts.pmf.len() - 1;
    if m_max < n_max {
        return Err(Error::Validation(format!(
            "need at least as many count rows as photon columns: m_max {m_max} < n_max {n_max}"
        )));
    }
    let matrix = cond_matrix(detector, n_max, m_max)?;
    let a = DMatrix::from_fn(m_max + 1, n_max + 1, |m, n| matrix.entry(m, n));
    let b = DVector::from_column_slice(&counts.pmf);
    let sv = a.clone().svd(false, false).singular_values;
    let (s_max, s_min) = (sv.max(), sv.min());
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if condition > config.general_condition_bound {
        return Err(Error::RankDeficient(format!(
            "conditioning estimate {condition:.3e} exceeds bound {:.1e}; shrink n_max or use an exact inverse",
            config.general_condition_bound
        )));
    }
    let mut x = if nonneg { nnls(&a, &b) } else { svd_solve(&a, &b) };
    if nonneg {
        let mass = x.sum();
        if mass > 1.0 + config.negativity_tol {
            // Re-solve with a penalty row lambda * sum(p) = lambda pulling
            // the total mass back to 1.
            let lambda = 1e4;
            let aug_a = a.clone().insert_row(m_max + 1, lambda);
            let aug_b = b.clone().insert_row(m_max + 1, lambda);
            x = nnls(&aug_a, &aug_b);
        }
    }
    let residual = (&a * &x - &b).norm();
    package(x.iter().copied().collect(), condition, Some(residual), config.negativity_tol)
}

pub fn invert_general(
    counts: &CountDistribution,
    detector: &DetectorConfig,
    n_max: usize,
    nonneg: bool,
) -> Result<PhotonStatistics> {
    Ok(invert_general_with(counts, detector, n_max, nonneg, &InversionConfig::default())?.statistics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;
    use crate::statistics::{count_distribution, Provenance};
    use crate::states::{coherent_pmf, fock_pmf};

    fn poissonian(efficiency: f64, n_noise: f64) -> DetectorConfig {
        DetectorConfig::new(efficiency, NoiseModel::PoissonianLimit { n_noise }).unwrap()
    }

    fn forward(state: &PhotonStatistics, det: &DetectorConfig, m_max: usize) -> CountDistribution {
        count_distribution(state, det, m_max).unwrap()
    }

    #[test]
    fn lossy_recovers_single_photon() {
        let counts = forward(&fock_pmf(1), &poissonian(0.8, 0.0), 10);
        let p = invert_lossy(&counts, 0.8).unwrap();
        assert!(p.pmf()[0].abs() < 1e-12);
        assert!((p.pmf()[1] - 1.0).abs() < 1e-12);
        assert!(p.pmf()[2..].iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn lossy_recovers_coherent_input() {
        let state = coherent_pmf(2.0, 60).unwrap();
        let counts = forward(&state, &poissonian(0.5, 0.0), 40);
        let p = invert_lossy(&counts, 0.5).unwrap();
        for n in 0..=20 {
            let want = state.pmf()[n];
            assert!((p.pmf()[n] - want).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn lossy_identity_at_unit_efficiency() {
        let counts = forward(&fock_pmf(2), &poissonian(0.7, 0.0), 8);
        let p = invert_lossy(&counts, 1.0).unwrap();
        for (a, b) in p.pmf().iter().zip(&counts.pmf) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn lossy_reports_growth_exponent() {
        let counts = forward(&fock_pmf(1), &poissonian(0.5, 0.0), 10);
        let report = invert_lossy_with(&counts, 0.5, &InversionConfig::default()).unwrap();
        assert_eq!(report.condition, 10.0);
        assert_eq!(report.clipped, 0.0);
        assert!(report.residual.is_none());
    }

    #[test]
    fn lossy_refuses_ill_conditioned() {
        let counts = forward(&coherent_pmf(1.0, 50).unwrap(), &poissonian(0.1, 0.0), 40);
        let err = invert_lossy(&counts, 0.1).unwrap_err();
        assert!(matches!(err, Error::IllConditioned(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn lossy_flags_unbearable_negativity() {
        let counts = CountDistribution {
            pmf: vec![0.9, 0.0, 0.1],
            tail_bound: 0.0,
            provenance: Provenance::AnalyticSeries,
        };
        let err = invert_lossy(&counts, 0.5).unwrap_err();
        assert!(matches!(err, Error::Negativity(_)));
    }

    #[test]
    fn lossy_rejects_unnormalized_counts() {
        let counts = CountDistribution {
            pmf: vec![0.5, 0.4],
            tail_bound: 0.0,
            provenance: Provenance::OracleMc,
        };
        assert!(matches!(invert_lossy(&counts, 0.9), Err(Error::Validation(_))));
    }

    #[test]
    fn unit_efficiency_pure_noise_is_vacuum() {
        let counts = forward(&fock_pmf(0), &poissonian(1.0, 0.5), 25);
        let p = invert_unit_efficiency(&counts, 0.5).unwrap();
        assert!((p.pmf()[0] - 1.0).abs() < 1e-10);
        assert!(p.pmf()[1..].iter().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn unit_efficiency_recovers_fock_two() {
        let counts = forward(&fock_pmf(2), &poissonian(1.0, 0.3), 20);
        let p = invert_unit_efficiency(&counts, 0.3).unwrap();
        for (n, &v) in p.pmf().iter().enumerate().take(12) {
            let want = if n == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-8, "n={n}: {v}");
        }
    }

    #[test]
    fn unit_efficiency_noiseless_identity() {
        let counts = forward(&fock_pmf(3), &poissonian(1.0, 0.0), 6);
        let p = invert_unit_efficiency(&counts, 0.0).unwrap();
        for (a, b) in p.pmf().iter().zip(&counts.pmf) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_efficiency_refuses_large_noise() {
        let counts = forward(&fock_pmf(0), &poissonian(1.0, 0.5), 25);
        let err = invert_unit_efficiency(&counts, 31.0).unwrap_err();
        assert!(matches!(err, Error::IllConditioned(_)));
    }

    #[test]
    fn exact_inverses_preserve_mass() {
        let state = coherent_pmf(1.5, 50).unwrap();
        let counts = forward(&state, &poissonian(0.6, 0.0), 30);
        let p = invert_lossy(&counts, 0.6).unwrap();
        let mass: f64 = p.pmf().iter().sum();
        assert!((mass - 1.0).abs() < 1e-6);

        let counts = forward(&state, &poissonian(1.0, 1.0), 45);
        let p = invert_unit_efficiency(&counts, 1.0).unwrap();
        let mass: f64 = p.pmf().iter().sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lossy_perturbation_stays_in_sanity_band() {
        let state = coherent_pmf(1.0, 50).unwrap();
        let base = forward(&state, &poissonian(0.8, 0.0), 20);
        let mut shaken = base.clone();
        for (m, p) in shaken.pmf.iter_mut().enumerate() {
            if *p >= 1e-9 {
                *p += if m % 2 == 0 { 1e-10 } else { -1e-10 };
            }
        }
        let a = invert_lossy_with(&base, 0.8, &InversionConfig::default()).unwrap();
        let b = invert_lossy_with(&shaken, 0.8, &InversionConfig::default()).unwrap();
        // Worst-case amplification: the largest absolute row sum of the
        // inverse coefficients.
        let m_max = 20usize;
        let x: f64 = 1.0 / 0.8 - 1.0;
        let mut amp: f64 = 0.0;
        for n in 0..=m_max {
            let mut row = 0.0;
            for m in n..=m_max {
                let coef = log_binomial(m as u64, n as i64).log_magnitude()
                    - n as f64 * 0.8f64.ln()
                    + (m - n) as f64 * x.ln();
                row += coef.exp();
            }
            amp = amp.max(row);
        }
        for (pa, pb) in a.statistics.pmf().iter().zip(b.statistics.pmf()) {
            assert!((pa - pb).abs() <= 10.0 * amp * 1e-10);
        }
    }

    #[test]
    fn general_identity_channel() {
        let counts = forward(&fock_pmf(2), &poissonian(1.0, 0.0), 6);
        let p = invert_general(&counts, &poissonian(1.0, 0.0), 6, false).unwrap();
        for (a, b) in p.pmf().iter().zip(&counts.pmf) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn general_round_trip_concentrates_on_input() {
        let det = poissonian(0.8, 0.2);
        let counts = forward(&fock_pmf(1), &det, 20);
        let report = invert_general_with(&counts, &det, 10, true, &InversionConfig::default()).unwrap();
        assert!(report.statistics.pmf()[1] >= 0.999);
        assert!(report.residual.unwrap() < 1e-8);
    }

    #[test]
    fn general_agrees_with_lossy() {
        let state = coherent_pmf(1.0, 40).unwrap();
        let det = poissonian(0.8, 0.0);
        let counts = forward(&state, &det, 20);
        let exact = invert_lossy(&counts, 0.8).unwrap();
        let ls = invert_general(&counts, &det, 15, false).unwrap();
        for n in 0..=15 {
            assert!((exact.pmf()[n] - ls.pmf()[n]).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn general_respects_condition_bound() {
        let det = poissonian(0.8, 0.2);
        let counts = forward(&fock_pmf(1), &det, 20);
        let tight = InversionConfig { general_condition_bound: 10.0, ..Default::default() };
        let err = invert_general_with(&counts, &det, 10, false, &tight).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn general_needs_enough_rows() {
        let counts = forward(&fock_pmf(1), &poissonian(0.9, 0.1), 5);
        assert!(invert_general(&counts, &poissonian(0.9, 0.1), 9, false).is_err());
    }

    #[test]
    fn general_nonneg_caps_total_mass() {
        // Counts that no physical input reproduces: the best nonnegative
        // fit through a 60% efficient channel wants more than unit mass.
        let counts = CountDistribution {
            pmf: vec![0.05, 0.95, 0.0],
            tail_bound: 0.0,
            provenance: Provenance::AnalyticSeries,
        };
        let det = poissonian(0.6, 0.0);
        let report = invert_general_with(&counts, &det, 2, true, &InversionConfig::default()).unwrap();
        let mass: f64 = report.statistics.pmf().iter().sum();
        assert!(mass <= 1.0 + 1e-6, "mass {mass}");
        assert!(report.residual.unwrap() > 1e-3);
    }
}
