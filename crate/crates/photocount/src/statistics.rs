//! Count statistics behind the detector: the count distribution, its
//! moments in closed form, the Mandel Q parameter, and the noise level at
//! which sub-Poissonian statistics disappear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DetectorConfig, NoiseModel};
use crate::povm::cond_matrix;
use crate::specfun::Neumaier;
use crate::states::{PhotonStatistics, StateMoments};

/// How a count distribution was produced. The analytic series carries the
/// normalization invariant; the oracle tags mark brute-force cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticSeries,
    OracleMc,
    OracleFock,
}

/// A truncated photocount distribution `P_0 ... P_{m_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub pmf: Vec<f64>,
    pub tail_bound: f64,
    pub provenance: Provenance,
}

impl CountDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.pmf.is_empty() {
            return Err(Error::Validation("count distribution needs at least one entry".into()));
        }
        for (m, &p) in self.pmf.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("P_{m} = {p} is not a valid probability")));
            }
        }
        if !self.tail_bound.is_finite() || self.tail_bound < 0.0 {
            return Err(Error::Validation(format!("invalid tail bound {}", self.tail_bound)));
        }
        if self.provenance == Provenance::AnalyticSeries {
            let total = self.total_mass() + self.tail_bound;
            if !(1.0 - 1e-9..=1.0 + 1e-9).contains(&total) {
                return Err(Error::Validation(format!(
                    "analytic count distribution mass {total} outside [1 - 1e-9, 1 + 1e-9]"
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        let mut sum = Neumaier::default();
        for &p in &self.pmf {
            sum.add(p);
        }
        sum.total()
    }

    pub fn mean(&self) -> f64 {
        let mut sum = Neumaier::default();
        for (m, &p) in self.pmf.iter().enumerate() {
            sum.add(m as f64 * p);
        }
        sum.total()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let mut sum = Neumaier::default();
        for (m, &p) in self.pmf.iter().enumerate() {
            let d = m as f64 - mean;
            sum.add(d * d * p);
        }
        sum.total()
    }
}

/// P_m = sum_n P(m|n) p_n for m up to `m_max`. The tail bound combines the
/// state's truncated mass with the per-column conditional tails.
pub fn count_distribution(
    state: &PhotonStatistics,
    detector: &DetectorConfig,
    m_max: usize,
) -> Result<CountDistribution> {
    let matrix = cond_matrix(detector, state.n_max(), m_max)?;
    let width = state.n_max() + 1;
    let mut pmf = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let row = &matrix.entries[m * width..(m + 1) * width];
        let mut acc = Neumaier::default();
        for (p_cond, p_n) in row.iter().zip(state.pmf()) {
            acc.add(p_cond * p_n);
        }
        pmf.push(acc.total().clamp(0.0, 1.0));
    }
    let mut tail = Neumaier::default();
    tail.add(state.tail_bound());
    for (n, p_n) in state.pmf().iter().enumerate() {
        tail.add(p_n * matrix.column_tail_bounds[n]);
    }
    let tail_bound = tail.total().max(0.0);
    if tail_bound > 1e-6 {
        log::warn!("count distribution truncated with tail bound {tail_bound:.3e}");
    }
    Ok(CountDistribution { pmf, tail_bound, provenance: Provenance::AnalyticSeries })
}

/// Mean photocount number: `eta <n> + n_noise`, identical in both regimes.
pub fn count_mean(state_moments: &StateMoments, detector: &DetectorConfig) -> f64 {
    detector.efficiency * state_moments.mean_photons + detector.n_noise()
}

/// Photocount variance: mean + eta^2 <:dn^2:> + (n_noise/mu)(2 eta <n> + n_noise).
/// The last term is the mode-coupling excess; it vanishes in the
/// Poissonian limit (mu -> infinity).
pub fn count_variance(state_moments: &StateMoments, detector: &DetectorConfig) -> f64 {
    count_mean(state_moments, detector) + variance_excess(state_moments, detector)
}

/// The non-Poissonian part of the count variance, `variance - mean`.
fn variance_excess(state_moments: &StateMoments, detector: &DetectorConfig) -> f64 {
    let eta = detector.efficiency;
    let base = eta * eta * state_moments.normal_ordered_variance;
    match detector.noise {
        NoiseModel::PoissonianLimit { .. } => base,
        NoiseModel::FiniteModes { n_noise, modes } => {
            let t = n_noise / modes as f64;
            base + t * (2.0 * eta * state_moments.mean_photons + n_noise)
        }
    }
}

/// Mandel Q parameter, `variance/mean - 1`, from the closed-form moments.
/// Negative values certify sub-Poissonian counts. Undefined when no counts
/// ever arrive (zero mean).
pub fn mandel_q(state_moments: &StateMoments, detector: &DetectorConfig) -> Result<f64> {
    let mean = count_mean(state_moments, detector);
    if mean <= 0.0 {
        return Err(Error::Validation(
            "Mandel Q undefined: mean count is zero (no light, no noise)".into(),
        ));
    }
    Ok(variance_excess(state_moments, detector) / mean)
}

/// Result of the noise-threshold analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdOutcome {
    /// Noise level at which the Mandel Q parameter crosses zero.
    Critical(f64),
    /// Q >= 0 already at zero noise; no sub-Poissonian region exists.
    AlreadySuperPoissonian,
}

impl std::fmt::Display for ThresholdOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdOutcome::Critical(v) => write!(f, "{v}"),
            ThresholdOutcome::AlreadySuperPoissonian => write!(f, "already-super-Poissonian"),
        }
    }
}

/// Noise count threshold above which the finite-mode counts turn
/// super-Poissonian: `eta (sqrt(<n>^2 - mu <:dn^2:>) - <n>)` for
/// sub-Poissonian input, or the marker for states with nothing to lose.
pub fn noise_threshold(
    state_moments: &StateMoments,
    efficiency: f64,
    modes: u64,
) -> Result<ThresholdOutcome> {
    if !efficiency.is_finite() || efficiency <= 0.0 || efficiency > 1.0 {
        return Err(Error::Validation(format!(
            "efficiency must lie in (0, 1], got {efficiency}"
        )));
    }
    if modes < 1 {
        return Err(Error::Validation("mode count must be at least 1".into()));
    }
    let v = state_moments.normal_ordered_variance;
    if v >= 0.0 {
        return Ok(ThresholdOutcome::AlreadySuperPoissonian);
    }
    let mean = state_moments.mean_photons;
    let disc = mean * mean - modes as f64 * v;
    Ok(ThresholdOutcome::Critical(efficiency * (disc.sqrt() - mean)))
}

/// Truncation length that keeps count-distribution tail bounds at or below
/// ~1e-12 for the regimes in scope: mean + 12 sigma + 20.
pub fn suggested_m_max(state_moments: &StateMoments, detector: &DetectorConfig) -> usize {
    let mean = count_mean(state_moments, detector);
    let var = count_variance(state_moments, detector).max(0.0);
    (mean + 12.0 * var.sqrt() + 20.0).ceil() as usize
}
