//! The measurement itself: coherent-state symbols of the POVM elements and
//! Fock-basis conditional probabilities P(m|n), in all three regimes
//! (loss-only, Poissonian background, finite-mode thermal background).
//!
//! Closed forms are assembled in sign/log space and exponentiated once.
//! The finite-mode conditional probability is evaluated through a
//! term-reorganized series in which the factor `(1 + t - eta)^n` is
//! distributed over the hypergeometric terms as `(1 + t - eta)^(n-k)`;
//! every term is then finite and nonnegative even at `eta = 1`, where the
//! conventional hypergeometric argument diverges.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DetectorConfig, NoiseModel};
use crate::specfun::{laguerre, log_factorial, log_sum_exp_desc, LogReal, Neumaier};

/// Below this efficiency the analytic `eta -> 0` limit is used: no photon
/// reaches the detector and only noise counts remain.
const ETA_ZERO_LIMIT: f64 = 1e-12;

/// Coherent signal entering the detector: one amplitude per signal mode.
/// Only the total intensity enters any formula.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalAmplitudes {
    amplitudes: Vec<Complex64>,
}

impl SignalAmplitudes {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<SignalAmplitudes> {
        if amplitudes.is_empty() {
            return Err(Error::Validation("signal needs at least one mode".into()));
        }
        for (k, a) in amplitudes.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::Validation(format!("amplitude {k} is not finite: {a}")));
            }
        }
        let s = SignalAmplitudes { amplitudes };
        if !s.total_intensity().is_finite() {
            return Err(Error::Validation("total intensity overflows".into()));
        }
        Ok(s)
    }

    pub fn single_mode(alpha: Complex64) -> Result<SignalAmplitudes> {
        SignalAmplitudes::new(vec![alpha])
    }

    /// Single real mode carrying the given intensity |alpha|^2.
    pub fn with_intensity(intensity: f64) -> Result<SignalAmplitudes> {
        if !intensity.is_finite() || intensity < 0.0 {
            return Err(Error::Validation(format!(
                "intensity must be nonnegative, got {intensity}"
            )));
        }
        SignalAmplitudes::single_mode(Complex64::new(intensity.sqrt(), 0.0))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// ln Pois(m; mean), with the point-mass convention at mean = 0.
pub(crate) fn log_poisson_pmf(m: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + m as f64 * mean.ln() - log_factorial(m)
}

/// Probability of `n` counts for a coherent signal: the diagonal
/// coherent-state (Husimi) symbol of the POVM element.
///
/// Finite-mode regime with `t = n_noise / modes`:
/// `t^n / (1+t)^(n+mu) * exp(-S/(1+t)) * L_n^(mu-1)(-S / (t(1+t)))`
/// where `S = eta * total_intensity`. Poissonian limit: `Pois(n; S + n_noise)`.
/// At `n_noise = 0` both regimes reduce to `Pois(n; S)`, computed directly.
pub fn povm_symbol(n: u32, signal: &SignalAmplitudes, detector: &DetectorConfig) -> f64 {
    detector.validate().expect("invalid detector");
    let s = detector.efficiency * signal.total_intensity();
    let log_p = match detector.noise {
        NoiseModel::PoissonianLimit { n_noise } => log_poisson_pmf(u64::from(n), s + n_noise),
        NoiseModel::FiniteModes { n_noise, modes } => {
            if n_noise == 0.0 {
                log_poisson_pmf(u64::from(n), s)
            } else {
                let mu = modes as f64;
                let t = n_noise / mu;
                let lag = laguerre(n, mu - 1.0, -s / (t * (1.0 + t)));
                f64::from(n) * t.ln() - (f64::from(n) + mu) * t.ln_1p() - s / (1.0 + t)
                    + lag.log_magnitude()
            }
        }
    };
    log_p.exp().clamp(0.0, 1.0)
}

/// P(m|n) for Poissonian background noise.
///
/// For `m > n`: `e^(-N) N^(m-n) eta^n (n!/m!) L_n^(m-n)(x)`; for `m <= n`:
/// `e^(-N) (1-eta)^(n-m) eta^m L_m^(n-m)(x)`, with `x = N(eta-1)/eta <= 0`.
/// The `eta -> 0` limit is `Pois(m; N)` (no photon reaches the detector)
/// and is taken analytically below `1e-12`; at `eta = 1` the Laguerre
/// argument collapses to zero and the form becomes the shifted Poisson
/// distribution.
pub fn cond_prob_poisson(m: u32, n: u32, efficiency: f64, n_noise: f64) -> f64 {
    assert!(
        efficiency.is_finite() && (0.0..=1.0).contains(&efficiency),
        "efficiency out of range"
    );
    assert!(n_noise.is_finite() && n_noise >= 0.0, "noise mean out of range");
    if efficiency < ETA_ZERO_LIMIT {
        return log_poisson_pmf(u64::from(m), n_noise).exp();
    }
    let x = if n_noise == 0.0 { 0.0 } else { n_noise * (efficiency - 1.0) / efficiency };
    let log_eta = efficiency.ln();
    let val = if m > n {
        LogReal::from_f64(n_noise).powi(m - n)
            * LogReal::new(
                1,
                -n_noise + f64::from(n) * log_eta + log_factorial(u64::from(n))
                    - log_factorial(u64::from(m)),
            )
            * laguerre(n, f64::from(m - n), x)
    } else {
        LogReal::from_f64(1.0 - efficiency).powi(n - m)
            * LogReal::new(1, -n_noise + f64::from(m) * log_eta)
            * laguerre(m, f64::from(n - m), x)
    };
    val.value().clamp(0.0, 1.0)
}

/// P(m|n) for a finite-mode thermal background, `t = n_noise / modes`:
///
/// `C(m+mu-1, m) / (1+t)^(n+m+mu) * sum_{k=0}^{min(n,m)}
///   n! m! / ((n-k)! (m-k)! (mu)_k k!) * eta^k t^(m-k) (1+t-eta)^(n-k)`
///
/// which is the closed form `t^m (1+t-eta)^n / (1+t)^(n+m+mu) *
/// C(m+mu-1, m) * 2F1(-n, -m; mu; eta/(t(1+t-eta)))` with the
/// `(1+t-eta)^n` factor pushed into the series so the `eta = 1` case stays
/// finite term by term. All terms are nonnegative; the sum runs largest
/// term first in log space. At `n_noise = 0` falls back to the pure-loss
/// binomial via [`cond_prob_poisson`].
pub fn cond_prob_finite(m: u32, n: u32, efficiency: f64, n_noise: f64, modes: u64) -> f64 {
    assert!(
        efficiency.is_finite() && (0.0..=1.0).contains(&efficiency),
        "efficiency out of range"
    );
    assert!(n_noise.is_finite() && n_noise >= 0.0, "noise mean out of range");
    assert!(modes >= 1, "mode count must be at least 1");
    if n_noise == 0.0 {
        return cond_prob_poisson(m, n, efficiency, 0.0);
    }
    let mu = modes as f64;
    let t = n_noise / mu;
    // 1 + t - eta, with 1 - eta formed first: exact at eta = 1, so the
    // series terms carry t^(n-k) there instead of a 0/0.
    let w = (1.0 - efficiency) + t;
    let (log_t, log_w) = (t.ln(), w.ln());

    // ln C(m + mu - 1, m) as a compensated product sum; safe for mu up to
    // 1e6 and beyond where a difference of Stirling values would lose
    // absolute accuracy.
    let mut log_choose = Neumaier::default();
    for i in 1..=u64::from(m) {
        log_choose.add(((mu - 1.0 + i as f64) / i as f64).ln());
    }
    let log_prefix = log_choose.total() - (f64::from(n + m) + mu) * t.ln_1p();

    let kmax = n.min(m);
    // fall[k] = ln[ n!/(n-k)! * m!/(m-k)! ], poch[k] = ln[ (mu)_k * k! ].
    let mut logs = Vec::with_capacity(kmax as usize + 1);
    let mut fall = Neumaier::default();
    let mut poch = Neumaier::default();
    for k in 0..=kmax {
        if k > 0 {
            let i = f64::from(k - 1);
            fall.add((f64::from(n) - i).ln() + (f64::from(m) - i).ln());
            poch.add((mu + i).ln() + (i + 1.0).ln());
        }
        let eta_pow = if k == 0 { 0.0 } else { f64::from(k) * efficiency.ln() };
        logs.push(
            fall.total() - poch.total()
                + eta_pow
                + f64::from(m - k) * log_t
                + f64::from(n - k) * log_w,
        );
    }
    (log_prefix + log_sum_exp_desc(&mut logs)).exp().clamp(0.0, 1.0)
}

/// Dense table of P(m|n), rows `m = 0..=m_max`, columns `n = 0..=n_max`,
/// with per-column truncation tails.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalMatrix {
    pub m_max: usize,
    pub n_max: usize,
    /// Row-major: entry (m, n) sits at `m * (n_max + 1) + n`.
    pub entries: Vec<f64>,
    /// Per column n: `max(0, 1 - sum_m entries(m, n))`.
    pub column_tail_bounds: Vec<f64>,
    #[serde(skip)]
    pub detector: DetectorConfig,
}

impl ConditionalMatrix {
    pub fn entry(&self, m: usize, n: usize) -> f64 {
        self.entries[m * (self.n_max + 1) + n]
    }

    pub fn column(&self, n: usize) -> Vec<f64> {
        (0..=self.m_max).map(|m| self.entry(m, n)).collect()
    }

    /// CSV export: corner cell `m\n`, one column per photon number,
    /// 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m\\n");
        for n in 0..=self.n_max {
            out.push_str(&format!(",{n}"));
        }
        out.push('\n');
        for m in 0..=self.m_max {
            out.push_str(&format!("{m}"));
            for n in 0..=self.n_max {
                out.push_str(&format!(",{:.11e}", self.entry(m, n)));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the conditional probability table for the detector's regime.
pub fn cond_matrix(detector: &DetectorConfig, n_max: usize, m_max: usize) -> Result<ConditionalMatrix> {
    detector.validate()?;
    let width = n_max + 1;
    let mut entries = vec![0.0; (m_max + 1) * width];
    let mut column_tail_bounds = vec![0.0; width];
    for n in 0..=n_max {
        let mut col_sum = Neumaier::default();
        for m in 0..=m_max {
            let p = match detector.noise {
                NoiseModel::PoissonianLimit { n_noise } => {
                    cond_prob_poisson(m as u32, n as u32, detector.efficiency, n_noise)
                }
                NoiseModel::FiniteModes { n_noise, modes } => {
                    cond_prob_finite(m as u32, n as u32, detector.efficiency, n_noise, modes)
                }
            };
            entries[m * width + n] = p;
            col_sum.add(p);
        }
        column_tail_bounds[n] = (1.0 - col_sum.total()).max(0.0);
    }
    Ok(ConditionalMatrix { m_max, n_max, entries, column_tail_bounds, detector: *detector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;

    fn poissonian(efficiency: f64, n_noise: f64) -> DetectorConfig {
        DetectorConfig::new(efficiency, NoiseModel::PoissonianLimit { n_noise }).unwrap()
    }

    fn finite(efficiency: f64, n_noise: f64, modes: u64) -> DetectorConfig {
        DetectorConfig::new(efficiency, NoiseModel::FiniteModes { n_noise, modes }).unwrap()
    }

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn poisson_regime_examples() {
        assert!((cond_prob_poisson(0, 1, 0.3, 0.0) - 0.7).abs() < 1e-15);
        assert!(rel_err(cond_prob_poisson(1, 0, 0.9, 0.5), 0.303_265_329_856_316_7) < 1e-14);
        // Loss-noise convolution reference, 30-digit arithmetic.
        assert!(rel_err(cond_prob_poisson(2, 2, 0.5, 0.1), 0.272_582_272_183_332_8) < 1e-13);
        for n in 0..6 {
            assert_eq!(cond_prob_poisson(n, n, 1.0, 0.0), 1.0);
            if n > 0 {
                assert_eq!(cond_prob_poisson(n - 1, n, 1.0, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn poisson_regime_unit_efficiency_is_shifted_poisson() {
        // P(m|n) = e^{-N} N^{m-n} / (m-n)! at eta = 1.
        assert!(rel_err(cond_prob_poisson(5, 2, 1.0, 0.7), 0.028_388_126_533_408_906) < 1e-13);
        assert_eq!(cond_prob_poisson(1, 2, 1.0, 0.7), 0.0);
    }

    #[test]
    fn poisson_regime_zero_efficiency_is_pure_noise() {
        for n in [0u32, 3, 9] {
            assert!(rel_err(cond_prob_poisson(2, n, 0.0, 1.0), 0.5 * (-1.0f64).exp()) < 1e-14);
        }
        assert_eq!(cond_prob_poisson(0, 4, 0.0, 0.0), 1.0);
        assert_eq!(cond_prob_poisson(1, 4, 0.0, 0.0), 0.0);
    }

    #[test]
    fn finite_regime_examples() {
        assert!(rel_err(cond_prob_finite(0, 0, 0.5, 1.0, 2), 4.0 / 9.0) < 1e-14);
        assert!(rel_err(cond_prob_finite(1, 0, 0.7, 1.0, 1), 0.25) < 1e-14);
        // 30-digit reference for the mixed case.
        assert!(rel_err(cond_prob_finite(3, 2, 0.6, 0.8, 3), 0.170_999_895_192_133_96) < 1e-12);
    }

    #[test]
    fn finite_regime_unit_efficiency_stays_finite() {
        // eta = 1 makes the printed hypergeometric argument diverge; the
        // reorganized series must still give the right answer.
        assert!(rel_err(cond_prob_finite(12, 9, 1.0, 0.8, 2), 0.090_649_602_395_900_13) < 1e-12);
        assert!(rel_err(cond_prob_finite(0, 14, 1.0, 0.5, 1), 1.393_834_387_525_126_5e-7) < 1e-12);
    }

    #[test]
    fn finite_regime_zero_efficiency_is_negative_binomial() {
        let t: f64 = 0.25;
        let want = 4.0 * t.powi(3) / (1.0 + t).powi(5); // C(4,3) t^3 / (1+t)^5
        for n in [0u32, 3, 7] {
            assert!(rel_err(cond_prob_finite(3, n, 0.0, 0.5, 2), want) < 1e-13);
        }
    }

    #[test]
    fn finite_regime_large_mode_count_path() {
        // Exercises the mu = 1e6 branch of the prefix computation.
        assert!(rel_err(cond_prob_finite(3, 2, 0.3, 0.1, 1_000_000), 0.010_117_607_889_591_877) < 1e-9);
    }

    #[test]
    fn finite_regime_zero_noise_falls_back_to_binomial() {
        for m in 0..=5u32 {
            let got = cond_prob_finite(m, 5, 0.37, 0.0, 3);
            let want = cond_prob_poisson(m, 5, 0.37, 0.0);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn symbol_examples() {
        let vac = SignalAmplitudes::with_intensity(0.0).unwrap();
        assert!(rel_err(povm_symbol(0, &vac, &poissonian(1.0, 0.5)), (-0.5f64).exp()) < 1e-14);
        let one = SignalAmplitudes::with_intensity(1.0).unwrap();
        assert!(rel_err(povm_symbol(1, &one, &poissonian(1.0, 0.0)), (-1.0f64).exp()) < 1e-14);
        // 30-digit references for the finite-mode symbol.
        assert!(rel_err(povm_symbol(2, &one, &finite(0.5, 1.0, 1)), 0.149_067_337_384_761_09) < 1e-13);
        assert!(rel_err(povm_symbol(1, &one, &finite(0.6, 0.5, 2)), 0.310_480_754_672_649_23) < 1e-13);
        // Poissonian symbol is a plain Poisson pmf.
        assert!(rel_err(povm_symbol(2, &one, &poissonian(0.5, 1.0)), 0.251_021_430_166_983_6) < 1e-14);
    }

    #[test]
    fn symbol_depends_only_on_total_intensity() {
        let half = Complex64::new(0.5f64.sqrt(), 0.0);
        let two = SignalAmplitudes::new(vec![half, half]).unwrap();
        let one = SignalAmplitudes::with_intensity(1.0).unwrap();
        for d in [poissonian(0.8, 0.4), finite(0.8, 0.4, 2)] {
            for n in 0..6 {
                // Splitting the intensity across modes perturbs the last
                // ulp of the total, so equality holds to rounding only.
                assert!(rel_err(povm_symbol(n, &two, &d), povm_symbol(n, &one, &d)) < 1e-14);
            }
        }
        // Phase never enters.
        let rotated = SignalAmplitudes::single_mode(Complex64::new(0.0, 1.0)).unwrap();
        let plain = SignalAmplitudes::with_intensity(1.0).unwrap();
        assert_eq!(
            povm_symbol(3, &rotated, &finite(0.9, 0.7, 3)),
            povm_symbol(3, &plain, &finite(0.9, 0.7, 3))
        );
    }

    #[test]
    fn symbol_finite_regime_zero_noise_is_poisson() {
        let sig = SignalAmplitudes::with_intensity(1.0).unwrap();
        assert!(rel_err(povm_symbol(1, &sig, &finite(1.0, 0.0, 3)), (-1.0f64).exp()) < 1e-14);
    }

    #[test]
    fn symbol_matches_conditional_matrix_on_coherent_input() {
        // sum_k P(n|k) Pois(k; |alpha|^2) must reproduce the symbol.
        let intensity = 2.5;
        let sig = SignalAmplitudes::with_intensity(intensity).unwrap();
        let k_max = 120u32;
        for d in [poissonian(0.7, 0.5), finite(0.7, 0.8, 2)] {
            for n in 0..=10u32 {
                let mut acc = Neumaier::default();
                for k in 0..=k_max {
                    let p_k = log_poisson_pmf(u64::from(k), intensity).exp();
                    let cond = match d.noise {
                        NoiseModel::PoissonianLimit { n_noise } => {
                            cond_prob_poisson(n, k, d.efficiency, n_noise)
                        }
                        NoiseModel::FiniteModes { n_noise, modes } => {
                            cond_prob_finite(n, k, d.efficiency, n_noise, modes)
                        }
                    };
                    acc.add(p_k * cond);
                }
                let want = povm_symbol(n, &sig, &d);
                assert!(
                    (acc.total() - want).abs() < 1e-10,
                    "n={n} detector={d:?}: {} vs {want}",
                    acc.total()
                );
            }
        }
    }

    #[test]
    fn symbol_sums_to_one() {
        for d in [poissonian(0.9, 1.5), finite(0.9, 1.5, 2), finite(1.0, 0.5, 5)] {
            for &s in &[0.0, 1.0, 4.0] {
                let sig = SignalAmplitudes::with_intensity(s).unwrap();
                let total: f64 = (0..=260).map(|n| povm_symbol(n, &sig, &d)).sum();
                assert!(total >= 1.0 - 1e-10, "detector={d:?} S={s}: total {total}");
                assert!(total <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn cond_matrix_ideal_detector_is_identity() {
        let mat = cond_matrix(&poissonian(1.0, 0.0), 5, 5).unwrap();
        for m in 0..=5 {
            for n in 0..=5 {
                assert_eq!(mat.entry(m, n), if m == n { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn cond_matrix_pure_loss_columns_are_binomial() {
        let mat = cond_matrix(&poissonian(0.5, 0.0), 2, 2).unwrap();
        let want = [[1.0, 0.5, 0.25], [0.0, 0.5, 0.5], [0.0, 0.0, 0.25]];
        for (m, row) in want.iter().enumerate() {
            for (n, expected) in row.iter().enumerate() {
                assert!((mat.entry(m, n) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cond_matrix_columns_complete() {
        let mat = cond_matrix(&poissonian(0.8, 0.3), 10, 40).unwrap();
        for n in 0..=10 {
            let sum: f64 = mat.column(n).iter().sum();
            assert!(sum >= 1.0 - 1e-12, "column {n}: {sum}");
            assert!(mat.column_tail_bounds[n] <= 1e-12);
        }
        for &e in &mat.entries {
            assert!((0.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn cond_matrix_exports() {
        let mat = cond_matrix(&poissonian(0.5, 0.0), 1, 1).unwrap();
        let csv = mat.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "m\\n,0,1");
        assert!(lines.next().unwrap().starts_with("0,1.00000000000e0,5.00000000000e-1"));
        let json = serde_json::to_value(&mat).unwrap();
        assert_eq!(json["m_max"], 1);
        assert_eq!(json["entries"].as_array().unwrap().len(), 4);
        assert!(json.get("detector").is_none());
        assert_eq!(json["column_tail_bounds"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn signal_validation() {
        assert!(SignalAmplitudes::new(vec![]).is_err());
        assert!(SignalAmplitudes::single_mode(Complex64::new(f64::NAN, 0.0)).is_err());
        assert!(SignalAmplitudes::with_intensity(-1.0).is_err());
        let s = SignalAmplitudes::new(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 1.0)]).unwrap();
        assert!((s.total_intensity() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        for &eta in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            for &nn in &[0.0, 0.1, 1.0, 3.0] {
                for m in 0..=12u32 {
                    for n in 0..=12u32 {
                        let p = cond_prob_poisson(m, n, eta, nn);
                        assert!((0.0..=1.0).contains(&p), "pois m={m} n={n} eta={eta} N={nn}: {p}");
                        for &mu in &[1u64, 3, 1000] {
                            let q = cond_prob_finite(m, n, eta, nn, mu);
                            assert!((0.0..=1.0).contains(&q), "fin m={m} n={n} eta={eta} N={nn} mu={mu}: {q}");
                        }
                    }
                }
            }
        }
    }
}
