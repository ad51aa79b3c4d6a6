//! Independent brute-force routes to the same physics: semiclassical Monte
//! Carlo over the beam-splitter picture, direct loss/noise convolution,
//! exact-rational normal-ordered operator expansion, and an explicit
//! two-mode beam-splitter simulation on a truncated Fock space. These share
//! as little code as possible with the closed forms they validate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DetectorConfig, NoiseModel};
use crate::povm::SignalAmplitudes;
use crate::specfun::{log_binomial, log_factorial, LogReal, Neumaier};
use crate::statistics::{CountDistribution, Provenance};

/// Histogram of simulated photocounts, keyed by outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleHistogram {
    pub seed: u64,
    #[serde(rename = "samples")]
    pub total_samples: u64,
    #[serde(rename = "histogram")]
    pub counts: BTreeMap<u64, u64>,
}

impl SampleHistogram {
    /// Relative frequencies as a dense pmf over `0..=max_outcome`.
    pub fn empirical_pmf(&self) -> Vec<f64> {
        let len = self.counts.keys().next_back().map_or(0, |&m| m as usize) + 1;
        let mut pmf = vec![0.0; len];
        for (&m, &c) in &self.counts {
            pmf[m as usize] = c as f64 / self.total_samples as f64;
        }
        pmf
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for sample `index`: decorrelates consecutive indices so each
/// sample owns an independent generator regardless of execution order.
fn sample_key(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Semiclassical Monte Carlo over the noise model: the signal folds into
/// one thermal mode as `|s + c_1|^2 + sum_{l>=2} |c_l|^2` with per-mode
/// mean square `n_noise/modes`, then counts are Poissonian in the sampled
/// intensity. Deterministic for fixed (seed, samples): randomness is
/// counter-based per sample, so execution order cannot matter.
pub fn mc_sample_counts(
    signal: &SignalAmplitudes,
    detector: &DetectorConfig,
    samples: u64,
    seed: u64,
) -> Result<SampleHistogram> {
    detector.validate()?;
    let (n_noise, modes) = match detector.noise {
        NoiseModel::FiniteModes { n_noise, modes } => (n_noise, modes),
        NoiseModel::PoissonianLimit { .. } => {
            return Err(Error::Validation(
                "Monte Carlo sampling needs the finite-mode regime; model the Poissonian limit with a large mode count".into(),
            ))
        }
    };
    if samples < 1 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    let s = (detector.efficiency * signal.total_intensity()).sqrt();
    let sigma = (n_noise / modes as f64 / 2.0).sqrt();
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for index in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_key(seed, index));
        let mut intensity = 0.0;
        for l in 0..modes {
            let (mut re, mut im) = (0.0, 0.0);
            if sigma > 0.0 {
                re = sigma * rng.sample::<f64, _>(StandardNormal);
                im = sigma * rng.sample::<f64, _>(StandardNormal);
            }
            if l == 0 {
                re += s;
            }
            intensity += re * re + im * im;
        }
        let m = if intensity > 0.0 {
            Poisson::new(intensity).expect("positive intensity").sample(&mut rng) as u64
        } else {
            0
        };
        *counts.entry(m).or_insert(0) += 1;
    }
    Ok(SampleHistogram { seed, total_samples: samples, counts })
}

/// Direct convolution of binomial loss with independent Poissonian noise:
/// `sum_k C(n,k) eta^k (1-eta)^(n-k) e^(-n_noise) n_noise^(m-k)/(m-k)!`.
/// Plain double-precision sum, independent of the log-space machinery.
pub fn convolution_oracle_poisson(m: u32, n: u32, efficiency: f64, n_noise: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=m.min(n) {
        let mut binom = 1.0;
        for j in 0..k {
            binom *= (n - j) as f64 / (j + 1) as f64;
        }
        let mut term = binom
            * efficiency.powi(k as i32)
            * (1.0 - efficiency).powi((n - k) as i32)
            * (-n_noise).exp();
        for j in 1..=(m - k) {
            term *= n_noise / j as f64;
        }
        total += term;
    }
    total
}

fn big_factorial(n: u64) -> BigInt {
    let mut f = BigInt::one();
    for j in 2..=n {
        f *= j;
    }
    f
}

fn big_binomial(top: u64, k: u64) -> BigInt {
    if k > top {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    for j in 0..k {
        num *= top - j;
    }
    num / big_factorial(k)
}

fn rat_pow(base: &BigRational, k: u64) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..k {
        out *= base;
    }
    out
}

/// Fock-diagonal POVM element by normal-ordered expansion, in exact
/// rational arithmetic. The operator form expands into
/// `sum_k c_k :(a^dag a)^k:` and `<n| a^dag^k a^k |n> = n!/(n-k)!`;
/// every coefficient is rational once `eta` and `n_noise` are read as the
/// exact rationals their floating-point representations denote.
pub fn normal_ordered_expansion_oracle(m: u32, n: u32, detector: &DetectorConfig) -> Result<f64> {
    detector.validate()?;
    let (n_noise, modes) = match detector.noise {
        NoiseModel::FiniteModes { n_noise, modes } => (n_noise, modes),
        NoiseModel::PoissonianLimit { .. } => {
            return Err(Error::Validation(
                "operator-expansion oracle covers the finite-mode regime only".into(),
            ))
        }
    };
    if n > 200 {
        return Err(Error::Validation(format!(
            "operator-expansion oracle caps photon number at 200, got {n}"
        )));
    }
    let eta = BigRational::from_float(detector.efficiency).expect("validated efficiency");
    let m_u = u64::from(m);
    let n_u = u64::from(n);
    if n_noise == 0.0 {
        // Pure binomial loss.
        if m > n {
            return Ok(0.0);
        }
        let p = BigRational::new(big_binomial(n_u, m_u), BigInt::one())
            * rat_pow(&eta, m_u)
            * rat_pow(&(BigRational::one() - &eta), n_u - m_u);
        return Ok(p.to_f64().expect("finite probability"));
    }
    let t = BigRational::from_float(n_noise).expect("validated noise mean")
        / BigRational::new(BigInt::from(modes), BigInt::one());
    let one_plus_t = BigRational::one() + &t;
    let b = &eta / &one_plus_t;
    let c = &eta / (&t * &one_plus_t);
    let mut series = BigRational::zero();
    let mut falling = BigRational::one();
    for j in 0..=n_u {
        if j > 0 {
            falling *= BigRational::new(BigInt::from(n_u - j + 1), BigInt::one());
        }
        let mut g = BigRational::zero();
        for k in 0..=m_u.min(j) {
            let coeff = BigRational::new(big_binomial(m_u + modes - 1, m_u - k), big_factorial(k));
            let mut tail = rat_pow(&b, j - k) / BigRational::new(big_factorial(j - k), BigInt::one());
            if (j - k) % 2 == 1 {
                tail = -tail;
            }
            g += coeff * rat_pow(&c, k) * tail;
        }
        series += g * &falling;
    }
    let value = rat_pow(&t, m_u) / rat_pow(&one_plus_t, m_u + modes) * series;
    Ok(value.to_f64().expect("finite probability"))
}

/// Two-mode beam-splitter amplitude `<m1, n+j-m1| U |n, j>` with
/// transmittance sqrt(eta), all phases zero.
pub(crate) fn fock_bs_amplitude(n: u32, j: u32, m1: u32, efficiency: f64) -> f64 {
    let m2 = n + j - m1;
    let tau = LogReal::from_f64(efficiency.sqrt());
    let rho = LogReal::from_f64((1.0 - efficiency).sqrt());
    let lo = m1.saturating_sub(j);
    let hi = n.min(m1);
    let mut sum = LogReal::ZERO;
    for i in lo..=hi {
        let sign = if (m1 - i) % 2 == 1 { -1 } else { 1 };
        let term = log_binomial(u64::from(n), i64::from(i))
            * log_binomial(u64::from(j), i64::from(m1 - i))
            * tau.powi(2 * i + j - m1)
            * rho.powi(n + m1 - 2 * i)
            * LogReal::new(sign, 0.0);
        sum = sum + term;
    }
    let norm = 0.5
        * (log_factorial(u64::from(m1)) + log_factorial(u64::from(m2))
            - log_factorial(u64::from(n))
            - log_factorial(u64::from(j)));
    (sum * LogReal::new(1, norm)).value()
}

/// Exact Fock-space simulation of the noise model: |n> enters a
/// beam splitter of transmittance sqrt(eta) against a thermal mode whose
/// input mean `(n_noise/modes)/(1-eta)` puts exactly `n_noise/modes` noise
/// photons into the detected arm; the remaining `modes - 1` uncoupled
/// modes contribute negative-binomial counts. The thermal input is
/// truncated at `truncation` photons.
pub fn fock_bs_oracle(
    photon_number: u32,
    efficiency: f64,
    n_noise: f64,
    modes: u64,
    truncation: usize,
) -> Result<CountDistribution> {
    if !efficiency.is_finite() || !(0.0..1.0).contains(&efficiency) {
        return Err(Error::Validation(format!(
            "beam-splitter oracle needs 0 <= efficiency < 1, got {efficiency}"
        )));
    }
    if !n_noise.is_finite() || n_noise <= 0.0 {
        return Err(Error::Validation(format!(
            "beam-splitter oracle needs n_noise > 0, got {n_noise}"
        )));
    }
    if modes < 1 {
        return Err(Error::Validation("mode count must be at least 1".into()));
    }
    let t = n_noise / modes as f64;
    let nu_in = t / (1.0 - efficiency);
    let q = nu_in / (1.0 + nu_in);
    let input_tail = ((truncation + 1) as f64 * q.ln()).exp();
    if input_tail > 1e-12 {
        return Err(Error::TruncationInsufficient(format!(
            "thermal input tail {input_tail:.3e} above 1e-12 at truncation {truncation}"
        )));
    }
    let n = photon_number as usize;
    let len = n + truncation + 1;
    let mut single = vec![Neumaier::default(); len];
    let ln_q = q.ln();
    let ln_w0 = (1.0 - q).ln();
    for j in 0..=truncation {
        let w_j = (ln_w0 + j as f64 * ln_q).exp();
        for (m1, slot) in single.iter_mut().enumerate().take(n + j + 1) {
            let a = fock_bs_amplitude(photon_number, j as u32, m1 as u32, efficiency);
            slot.add(w_j * a * a);
        }
    }
    let single: Vec<f64> = single.iter().map(Neumaier::total).collect();
    let pmf = if modes == 1 {
        single
    } else {
        let mut nb = vec![0.0; len];
        let extra = modes - 1;
        for (mb, slot) in nb.iter_mut().enumerate() {
            let log_p = log_binomial(mb as u64 + extra - 1, mb as i64).log_magnitude()
                + mb as f64 * t.ln()
                - (mb as f64 + extra as f64) * t.ln_1p();
            *slot = log_p.exp();
        }
        let mut out = vec![0.0; len];
        for (m_total, slot) in out.iter_mut().enumerate() {
            let mut acc = Neumaier::default();
            for a in 0..=m_total {
                acc.add(single[a] * nb[m_total - a]);
            }
            *slot = acc.total();
        }
        out
    };
    let mut mass = Neumaier::default();
    for &p in &pmf {
        mass.add(p);
    }
    let tail_bound = (1.0 - mass.total()).max(0.0);
    Ok(CountDistribution { pmf, tail_bound, provenance: Provenance::OracleFock })
}
