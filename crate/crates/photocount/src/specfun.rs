//! Log-domain special functions: factorials, binomials, generalized
//! Laguerre polynomials and the terminating Gauss hypergeometric sum.
//!
//! Every closed form in this crate multiplies factorially large factors by
//! factorially small ones; the product is a probability but the factors
//! overflow `f64` long before `n` reaches interesting values. Values are
//! therefore carried as [`LogReal`] (sign plus natural log of the
//! magnitude) and exponentiated once, at final assembly. All in-scope
//! Laguerre and hypergeometric call sites produce single-sign term series,
//! which are summed largest term first so nothing is lost to cancellation.

use std::sync::OnceLock;

const FACTORIAL_CACHE_LEN: usize = 4096;

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Zero is `sign == 0`; its `log_magnitude` is ignored. Addition of two
/// same-sign values works on the log difference, so magnitudes up to
/// `exp(±700)` combine without overflow.
#[derive(Debug, Clone, Copy)]
pub struct LogReal {
    sign: i8,
    log_magnitude: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { sign: 0, log_magnitude: f64::NEG_INFINITY };
    pub const ONE: LogReal = LogReal { sign: 1, log_magnitude: 0.0 };

    pub fn new(sign: i8, log_magnitude: f64) -> LogReal {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            LogReal::ZERO
        } else {
            LogReal { sign, log_magnitude }
        }
    }

    pub fn from_f64(x: f64) -> LogReal {
        debug_assert!(!x.is_nan());
        if x == 0.0 {
            LogReal::ZERO
        } else {
            LogReal { sign: if x > 0.0 { 1 } else { -1 }, log_magnitude: x.abs().ln() }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Back to a plain `f64`; overflows to `±inf` past `exp(~709)`.
    pub fn value(self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }

    /// Integer power. `powi(0)` is one even for zero base, which is the
    /// convention every formula here relies on (factors like
    /// `(1 - eta)^(n - m)` must drop out at `eta = 1, n = m`).
    pub fn powi(self, k: u32) -> LogReal {
        if k == 0 {
            return LogReal::ONE;
        }
        if self.sign == 0 {
            return LogReal::ZERO;
        }
        let sign = if k.is_multiple_of(2) { 1 } else { self.sign };
        LogReal { sign, log_magnitude: self.log_magnitude * f64::from(k) }
    }
}

impl std::ops::Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 || rhs.sign == 0 {
            return LogReal::ZERO;
        }
        LogReal { sign: self.sign * rhs.sign, log_magnitude: self.log_magnitude + rhs.log_magnitude }
    }
}

impl std::ops::Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_magnitude >= rhs.log_magnitude { (self, rhs) } else { (rhs, self) };
        let d = lo.log_magnitude - hi.log_magnitude; // <= 0
        if hi.sign == lo.sign {
            LogReal { sign: hi.sign, log_magnitude: hi.log_magnitude + d.exp().ln_1p() }
        } else if d == 0.0 {
            LogReal::ZERO
        } else {
            LogReal { sign: hi.sign, log_magnitude: hi.log_magnitude + (-d.exp()).ln_1p() }
        }
    }
}

impl std::ops::Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal { sign: -self.sign, log_magnitude: self.log_magnitude }
    }
}

fn factorial_cache() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut cache = vec![0.0; FACTORIAL_CACHE_LEN];
        // Kahan-compensated running sum of ln k.
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (k, slot) in cache.iter_mut().enumerate().skip(2) {
            let x = (k as f64).ln() - comp;
            let t = sum + x;
            comp = (t - sum) - x;
            sum = t;
            *slot = sum;
        }
        cache
    })
}

/// ln(n!) beyond the cache: Stirling series with three correction terms,
/// relative error well under 1e-14 for n >= 4096.
fn stirling_log_factorial(n: u64) -> f64 {
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x + 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// ln(n!), relative error <= 1e-14 for n up to 1e6 (and beyond; the
/// Stirling branch only improves with n).
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < FACTORIAL_CACHE_LEN {
        factorial_cache()[n as usize]
    } else {
        stirling_log_factorial(n)
    }
}

/// ln C(n, k) as a [`LogReal`]; zero (sign 0) when k is outside [0, n].
///
/// For a short side up to 512 the log is a compensated sum over
/// ln((n - j)/(j + 1)), which keeps absolute error at rounding level even
/// when n is huge and the factorial-difference route would cancel.
pub fn log_binomial(n: u64, k: i64) -> LogReal {
    if k < 0 || k as u64 > n {
        return LogReal::ZERO;
    }
    let k = (k as u64).min(n - k as u64);
    if k <= 512 {
        let mut acc = Neumaier::default();
        for j in 0..k {
            acc.add(((n - j) as f64).ln());
            acc.add(-(((j + 1) as f64).ln()));
        }
        return LogReal::new(1, acc.total());
    }
    LogReal::new(1, log_factorial(n) - log_factorial(k) - log_factorial(n - k))
}

/// ln of the sum of positive terms given by their logs, accumulated
/// largest first. Consumes and reorders the buffer.
pub(crate) fn log_sum_exp_desc(logs: &mut Vec<f64>) -> f64 {
    logs.retain(|l| *l > f64::NEG_INFINITY);
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    logs.sort_unstable_by(|a, b| b.total_cmp(a));
    let top = logs[0];
    // Neumaier sum of exp(l - top) over the rest; every addend is in (0, 1].
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &l in &logs[1..] {
        let x = (l - top).exp();
        let t = sum + x;
        comp += if sum >= x { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    top + (sum + comp).ln_1p()
}

/// Generalized Laguerre polynomial L_n^a(x) = sum_k C(n+a, n-k) (-x)^k / k!.
///
/// For x <= 0 (every in-scope call site) and a > -1 all terms share one
/// sign and the sum is evaluated cancellation-free in log space; each
/// term's log is assembled directly from compensated prefix sums rather
/// than by a running ratio, so per-term log error stays at rounding level.
/// For x > 0 the alternating series is folded through [`LogReal`]
/// addition, which is adequate for the test-oracle uses it has here.
pub fn laguerre(n: u32, a: f64, x: f64) -> LogReal {
    assert!(a > -1.0, "laguerre: parameter a = {a} out of range (need a > -1)");
    assert!(x.is_finite(), "laguerre: non-finite argument");
    // suffix[k] = sum_{j=k+1..=n} ln(a + j), so C(n+a, n-k) = exp(suffix[k] - lf(n-k)).
    let n_us = n as usize;
    let mut suffix = vec![0.0; n_us + 1];
    let mut comp = 0.0;
    for k in (0..n_us).rev() {
        let x_add = (a + (k as f64 + 1.0)).ln() - comp;
        let t = suffix[k + 1] + x_add;
        comp = (t - suffix[k + 1]) - x_add;
        suffix[k] = t;
    }
    let term_log = |k: u32| -> f64 {
        suffix[k as usize] - log_factorial(u64::from(n - k)) - log_factorial(u64::from(k))
            + f64::from(k) * x.abs().ln()
    };
    if x == 0.0 {
        return LogReal::new(1, suffix[0] - log_factorial(u64::from(n)));
    }
    if x < 0.0 {
        let mut logs: Vec<f64> = (0..=n).map(term_log).collect();
        LogReal::new(1, log_sum_exp_desc(&mut logs))
    } else {
        let mut acc = LogReal::ZERO;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            acc = acc + LogReal::new(sign, term_log(k));
        }
        acc
    }
}

/// Terminating Gauss hypergeometric sum
/// 2F1(-n, -m; c; z) = sum_{k=0}^{min(n,m)} [(-n)_k (-m)_k / (c)_k] z^k / k!.
///
/// For z >= 0 all terms are nonnegative and the sum is cancellation-free
/// (log space, largest term first). Falling factorials and Pochhammer
/// symbols are accumulated as compensated log prefix sums.
pub fn hyp2f1_terminating(n: u32, m: u32, c: f64, z: f64) -> LogReal {
    assert!(c > 0.0, "hyp2f1_terminating: parameter c = {c} must be positive");
    assert!(z.is_finite(), "hyp2f1_terminating: non-finite argument");
    let kmax = n.min(m) as usize;
    if kmax == 0 || z == 0.0 {
        return LogReal::ONE;
    }
    // fall[k] = ln[(n)(n-1)...(n-k+1) * (m)(m-1)...(m-k+1)], poch[k] = ln[(c)_k * k!].
    let mut fall = vec![0.0; kmax + 1];
    let mut poch = vec![0.0; kmax + 1];
    let (mut cf, mut cp) = (0.0, 0.0);
    for k in 1..=kmax {
        let i = (k - 1) as f64;
        let xf = ((f64::from(n) - i).ln() + (f64::from(m) - i).ln()) - cf;
        let tf = fall[k - 1] + xf;
        cf = (tf - fall[k - 1]) - xf;
        fall[k] = tf;
        let xp = ((c + i).ln() + (i + 1.0).ln()) - cp;
        let tp = poch[k - 1] + xp;
        cp = (tp - poch[k - 1]) - xp;
        poch[k] = tp;
    }
    let lz = z.abs().ln();
    if z > 0.0 {
        let mut logs: Vec<f64> = (0..=kmax).map(|k| fall[k] - poch[k] + k as f64 * lz).collect();
        LogReal::new(1, log_sum_exp_desc(&mut logs))
    } else {
        let mut acc = LogReal::ZERO;
        for k in 0..=kmax {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            acc = acc + LogReal::new(sign, fall[k] - poch[k] + k as f64 * lz);
        }
        acc
    }
}

/// Compensated (Neumaier) accumulator for plain f64 sums; used wherever
/// signs may alternate and log-space tricks do not apply.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() { (self.sum - t) + x } else { (x - t) + self.sum };
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
