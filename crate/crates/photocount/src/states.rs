//! Input photon-number statistics: standard state generators, user-supplied
//! distributions, and their first two moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{log_factorial, Neumaier};

/// Generated pmfs are truncated at the smallest length whose analytic tail
/// is at or below this target.
const GENERATOR_TAIL_TARGET: f64 = 1e-14;

/// Slack allowed on total mass; covers rounding in inversion outputs.
const MASS_SLACK: f64 = 1e-6;

/// A truncated photon-number distribution `p_0 ... p_{n_max}` together
/// with an upper bound on the truncated mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStatistics {
    pmf: Vec<f64>,
    tail_bound: f64,
}

impl PhotonStatistics {
    /// Validates entries and mass; the stored tail bound is raised to the
    /// actual residual `1 - sum` if the declared bound is smaller.
    pub fn new(pmf: Vec<f64>, tail_bound: f64) -> Result<PhotonStatistics> {
        if pmf.is_empty() {
            return Err(Error::Validation("photon statistics need at least one entry".into()));
        }
        let mut sum = Neumaier::default();
        for (n, &p) in pmf.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("p_{n} = {p} is not a valid probability")));
            }
            sum.add(p);
        }
        let total = sum.total();
        if total > 1.0 + MASS_SLACK {
            return Err(Error::Validation(format!("total mass {total} exceeds 1")));
        }
        if !tail_bound.is_finite() || tail_bound < 0.0 {
            return Err(Error::Validation(format!("invalid tail bound {tail_bound}")));
        }
        let tail = tail_bound.max(1.0 - total).max(0.0);
        Ok(PhotonStatistics { pmf, tail_bound: tail })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len() - 1
    }
}

/// First two photon-number moments: the mean and the normal-ordered
/// variance (negative for sub-Poissonian states, with the Fock-state floor
/// at minus the mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMoments {
    pub mean_photons: f64,
    pub normal_ordered_variance: f64,
}

impl StateMoments {
    pub fn new(mean_photons: f64, normal_ordered_variance: f64) -> Result<StateMoments> {
        if !mean_photons.is_finite() || mean_photons < 0.0 {
            return Err(Error::Validation(format!("mean photon number {mean_photons} invalid")));
        }
        if !normal_ordered_variance.is_finite()
            || normal_ordered_variance < -mean_photons - 1e-9 * mean_photons.max(1.0)
        {
            return Err(Error::Validation(format!(
                "normal-ordered variance {normal_ordered_variance} below the Fock floor -{mean_photons}"
            )));
        }
        Ok(StateMoments { mean_photons, normal_ordered_variance })
    }
}

/// Coherent-state (Poisson) statistics with mean `intensity`, truncated at
/// `n_max`. The tail bound is the analytic Poisson remainder.
pub fn coherent_pmf(intensity: f64, n_max: usize) -> Result<PhotonStatistics> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::Validation(format!("intensity must be nonnegative, got {intensity}")));
    }
    if intensity == 0.0 {
        let mut pmf = vec![0.0; n_max + 1];
        pmf[0] = 1.0;
        return PhotonStatistics::new(pmf, 0.0);
    }
    let pmf: Vec<f64> = (0..=n_max)
        .map(|n| (-intensity + n as f64 * intensity.ln() - log_factorial(n as u64)).exp())
        .collect();
    PhotonStatistics::new(pmf, poisson_tail(intensity, n_max))
}

/// Upper bound on the Poisson mass above `n_max`: the first omitted term
/// times a geometric envelope once the term ratio falls below one.
fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    let next = n_max as f64 + 1.0;
    let first_omitted = (-mean + next * mean.ln() - log_factorial(n_max as u64 + 1)).exp();
    let ratio = mean / (next + 1.0);
    if ratio < 1.0 {
        first_omitted / (1.0 - ratio)
    } else {
        1.0
    }
}

/// Coherent-state statistics truncated where the analytic tail first drops
/// to the generator target.
pub fn coherent_pmf_auto(intensity: f64) -> Result<PhotonStatistics> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::Validation(format!("intensity must be nonnegative, got {intensity}")));
    }
    let mut n_max = 0;
    while poisson_tail(intensity, n_max) > GENERATOR_TAIL_TARGET {
        n_max += 1;
    }
    coherent_pmf(intensity, n_max)
}

/// Fock state |n>: a point mass, tail bound zero.
pub fn fock_pmf(n: usize) -> PhotonStatistics {
    let mut pmf = vec![0.0; n + 1];
    pmf[n] = 1.0;
    PhotonStatistics { pmf, tail_bound: 0.0 }
}

/// Single-mode thermal (Bose-Einstein) statistics with the given mean,
/// truncated at `n_max`; the geometric tail is exact.
pub fn thermal_pmf(mean: f64, n_max: usize) -> Result<PhotonStatistics> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Validation(format!("thermal mean must be nonnegative, got {mean}")));
    }
    if mean == 0.0 {
        let mut pmf = vec![0.0; n_max + 1];
        pmf[0] = 1.0;
        return PhotonStatistics::new(pmf, 0.0);
    }
    let q = mean / (1.0 + mean);
    let mut pmf = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 / (1.0 + mean);
    for _ in 0..=n_max {
        pmf.push(p);
        p *= q;
    }
    // The loop leaves p = q^{n_max + 1} / (1 + mean) * (1 + mean) ... i.e.
    // the exact remaining mass is q^{n_max+1}.
    PhotonStatistics::new(pmf, q.powi(n_max as i32 + 1))
}

/// Thermal statistics truncated where the geometric tail reaches the
/// generator target.
pub fn thermal_pmf_auto(mean: f64) -> Result<PhotonStatistics> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Validation(format!("thermal mean must be nonnegative, got {mean}")));
    }
    if mean == 0.0 {
        return thermal_pmf(0.0, 0);
    }
    let q = mean / (1.0 + mean);
    let n_max = (GENERATOR_TAIL_TARGET.ln() / q.ln()).ceil().max(1.0) as usize;
    thermal_pmf(mean, n_max)
}

/// Mean and normal-ordered variance of a truncated distribution. Warns
/// when the tail bound is large enough to make the moments unreliable.
pub fn moments(state: &PhotonStatistics) -> StateMoments {
    if state.tail_bound() > 1e-6 {
        log::warn!(
            "photon statistics truncated with tail bound {:.3e}; moments may be unreliable",
            state.tail_bound()
        );
    }
    let mut first = Neumaier::default();
    let mut second = Neumaier::default();
    for (n, &p) in state.pmf().iter().enumerate() {
        let nf = n as f64;
        first.add(nf * p);
        second.add(nf * nf * p);
    }
    let mean = first.total();
    StateMoments {
        mean_photons: mean,
        normal_ordered_variance: second.total() - mean - mean * mean,
    }
}

/// Validates a user-supplied pmf. Values in [-1e-12, 0) are clipped to
/// zero (float dust from external deconvolution tools); anything lower is
/// an error. Returns the statistics and the renormalization factor applied
/// (1 when `renormalize` is false).
pub fn pmf_from_values(values: &[f64], renormalize: bool) -> Result<(PhotonStatistics, f64)> {
    if values.is_empty() {
        return Err(Error::Validation("empty pmf".into()));
    }
    let mut clipped = Vec::with_capacity(values.len());
    for (n, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < -1e-12 {
            return Err(Error::Validation(format!("p_{n} = {v} is not a valid probability")));
        }
        clipped.push(v.max(0.0));
    }
    let mut sum = Neumaier::default();
    for &v in &clipped {
        sum.add(v);
    }
    let total = sum.total();
    if renormalize {
        if total <= 0.0 {
            return Err(Error::Validation("cannot renormalize a zero distribution".into()));
        }
        let factor = 1.0 / total;
        for v in &mut clipped {
            *v *= factor;
        }
        Ok((PhotonStatistics::new(clipped, 0.0)?, factor))
    } else {
        if total > 1.0 + 1e-9 {
            return Err(Error::Validation(format!("total mass {total} exceeds 1")));
        }
        Ok((PhotonStatistics::new(clipped, (1.0 - total).max(0.0))?, 1.0))
    }
}

/// State description as consumed from files and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateSpec {
    Pmf {
        p: Vec<f64>,
        #[serde(default)]
        renormalize: bool,
    },
    Coherent { param: f64 },
    Fock { param: u64 },
    Thermal { param: f64 },
}

impl StateSpec {
    pub fn build(&self) -> Result<PhotonStatistics> {
        match self {
            StateSpec::Pmf { p, renormalize } => Ok(pmf_from_values(p, *renormalize)?.0),
            StateSpec::Coherent { param } => coherent_pmf_auto(*param),
            StateSpec::Fock { param } => {
                let n = usize::try_from(*param)
                    .map_err(|_| Error::Validation(format!("fock photon number {param} too large")))?;
                if n > 10_000_000 {
                    return Err(Error::Validation(format!("fock photon number {param} too large")));
                }
                Ok(fock_pmf(n))
            }
            StateSpec::Thermal { param } => thermal_pmf_auto(*param),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_examples() {
        let vac = coherent_pmf(0.0, 5).unwrap();
        assert_eq!(vac.pmf(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let one = coherent_pmf(1.0, 50).unwrap();
        assert!((one.pmf()[1] - (-1.0f64).exp()).abs() < 1e-15);
        let m = moments(&coherent_pmf(2.0, 60).unwrap());
        assert!((m.mean_photons - 2.0).abs() < 1e-12);
        assert!(m.normal_ordered_variance.abs() < 1e-12);
    }

    #[test]
    fn fock_examples() {
        assert_eq!(fock_pmf(0).pmf(), &[1.0]);
        let m1 = moments(&fock_pmf(1));
        assert_eq!((m1.mean_photons, m1.normal_ordered_variance), (1.0, -1.0));
        let m3 = moments(&fock_pmf(3));
        assert_eq!(m3.normal_ordered_variance, -3.0);
    }

    #[test]
    fn fock_moments_attain_lower_bound_exactly() {
        for n in 0..=100 {
            let m = moments(&fock_pmf(n));
            assert_eq!(m.mean_photons, n as f64);
            assert_eq!(m.normal_ordered_variance, -(n as f64));
            assert!(StateMoments::new(m.mean_photons, m.normal_ordered_variance).is_ok());
        }
    }

    #[test]
    fn thermal_examples() {
        let vac = thermal_pmf(0.0, 5).unwrap();
        assert_eq!(vac.pmf()[0], 1.0);
        let th = thermal_pmf(1.0, 80).unwrap();
        assert!((th.pmf()[0] - 0.5).abs() < 1e-15);
        assert!((th.pmf()[1] - 0.25).abs() < 1e-15);
        let m = moments(&th);
        assert!((m.normal_ordered_variance - 1.0).abs() < 1e-10);
        let m_half = moments(&thermal_pmf(0.5, 80).unwrap());
        assert!((m_half.mean_photons - 0.5).abs() < 1e-10);
        assert!((m_half.normal_ordered_variance - 0.25).abs() < 1e-10);
    }

    #[test]
    fn coherent_moments_identity() {
        for &s in &[0.1, 1.0, 4.0, 10.0] {
            let m = moments(&coherent_pmf_auto(s).unwrap());
            assert!((m.mean_photons - s).abs() < 1e-10, "S={s}: mean {}", m.mean_photons);
            assert!(m.normal_ordered_variance.abs() < 1e-10, "S={s}");
        }
    }

    #[test]
    fn generators_cover_unit_mass() {
        let states = [
            coherent_pmf_auto(3.7).unwrap(),
            thermal_pmf_auto(2.2).unwrap(),
            fock_pmf(7),
            coherent_pmf(1.0, 4).unwrap(), // deliberately short truncation
        ];
        for s in &states {
            let total: f64 = s.pmf().iter().sum();
            assert!(total + s.tail_bound() >= 1.0 - 1e-12);
            assert!(s.pmf().iter().all(|&p| p >= 0.0));
            assert!(total <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn auto_truncation_hits_tail_target() {
        let c = coherent_pmf_auto(4.0).unwrap();
        assert!(c.tail_bound() <= 1e-14);
        let t = thermal_pmf_auto(1.0).unwrap();
        assert!(t.tail_bound() <= 1e-14);
        // And the truncation is not wildly conservative.
        assert!(c.n_max() < 80);
        assert!(t.n_max() < 80);
    }

    #[test]
    fn pmf_from_values_cases() {
        let (ok, f) = pmf_from_values(&[0.5, 0.5], false).unwrap();
        assert_eq!(ok.pmf(), &[0.5, 0.5]);
        assert_eq!(f, 1.0);
        assert!(pmf_from_values(&[0.6, 0.6], false).is_err());
        let (renorm, factor) = pmf_from_values(&[0.3, 0.3], true).unwrap();
        assert!((renorm.pmf()[0] - 0.5).abs() < 1e-15);
        assert!((renorm.pmf()[1] - 0.5).abs() < 1e-15);
        assert!((factor - 1.0 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn pmf_from_values_clipping_policy() {
        let (clipped, _) = pmf_from_values(&[0.9, -5e-13, 0.1], false).unwrap();
        assert_eq!(clipped.pmf()[1], 0.0);
        assert!(pmf_from_values(&[0.9, -1e-9], false).is_err());
        assert!(pmf_from_values(&[f64::NAN], false).is_err());
        assert!(pmf_from_values(&[], false).is_err());
    }

    #[test]
    fn state_spec_json() {
        let s: StateSpec = serde_json::from_str(r#"{"type":"fock","param":1}"#).unwrap();
        assert_eq!(s, StateSpec::Fock { param: 1 });
        let s: StateSpec = serde_json::from_str(r#"{"type":"pmf","p":[0.5,0.5]}"#).unwrap();
        assert_eq!(s, StateSpec::Pmf { p: vec![0.5, 0.5], renormalize: false });
        let s: StateSpec =
            serde_json::from_str(r#"{"type":"pmf","p":[0.3,0.3],"renormalize":true}"#).unwrap();
        let built = s.build().unwrap();
        assert!((built.pmf()[0] - 0.5).abs() < 1e-15);
        let s: StateSpec = serde_json::from_str(r#"{"type":"coherent","param":2.0}"#).unwrap();
        let built = s.build().unwrap();
        assert!((moments(&built).mean_photons - 2.0).abs() < 1e-10);
        assert!(serde_json::from_str::<StateSpec>(r#"{"type":"squeezed","param":1}"#).is_err());
    }

    #[test]
    fn state_spec_rejects_bad_params() {
        assert!(StateSpec::Coherent { param: -1.0 }.build().is_err());
        assert!(StateSpec::Thermal { param: f64::NAN }.build().is_err());
        assert!(StateSpec::Fock { param: u64::MAX }.build().is_err());
    }

    #[test]
    fn constructor_raises_tail_to_residual() {
        let s = PhotonStatistics::new(vec![0.25, 0.25], 0.0).unwrap();
        assert!((s.tail_bound() - 0.5).abs() < 1e-15);
        assert!(PhotonStatistics::new(vec![0.7, 0.7], 0.0).is_err());
        assert!(PhotonStatistics::new(vec![-0.1], 0.0).is_err());
    }
}
