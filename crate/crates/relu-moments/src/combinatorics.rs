//! Binomial square-root sums and Gamma-function ratios.
//!
//! The mean of the norm of a layer of ReLUs applied to an isotropic Gaussian
//! reduces to the binomially weighted chi-mean sum [`norm_growth_factor`],
//! whose terms are the Gamma ratios r_i = sqrt(2) Gamma((i+1)/2) / Gamma(i/2)
//! ([`gautschi_ratio`]). The companion sums A_n and B_n ([`binomial_sum_a`],
//! [`binomial_sum_b`]) sandwich that factor between sqrt-type envelopes.
//!
//! Everything is evaluated through log-Gamma so that widths up to 10^6 stay
//! in range; the raw sums A_n and B_n grow like 2^n and switch to a
//! log2-scaled representation past [`RAW_SUM_THRESHOLD`].

use crate::lgamma::lgamma_positive;

use std::f64::consts::LN_2;

/// Largest n for which A_n and B_n are returned as plain doubles.
/// 2^900 * sqrt(n/2 + 1) still sits comfortably below f64::MAX.
pub const RAW_SUM_THRESHOLD: u64 = 900;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("log_gamma requires a finite x > 0, got {0}")]
    NonPositiveArgument(f64),
    #[error("index must be at least 1 (Gamma(0) is a pole)")]
    ZeroIndex,
}

/// ln(Gamma(x)) for finite x > 0.
///
/// Relative error stays at the few-ulp level across `[0.5, 1e6]`, including
/// next to the zeros of ln(Gamma) at x = 1 and x = 2.
pub fn log_gamma(x: f64) -> Result<f64, Error> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(lgamma_positive(x))
}

/// ln C(n, k), evaluated as a difference of log-Gammas.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    lgamma_positive(n as f64 + 1.0)
        - lgamma_positive(k as f64 + 1.0)
        - lgamma_positive((n - k) as f64 + 1.0)
}

/// r_i = sqrt(2) Gamma((i+1)/2) / Gamma(i/2), the mean of a chi random
/// variable with i degrees of freedom.
///
/// Gautschi's inequality pins it between sqrt(i-1) and sqrt(i+1).
pub fn gautschi_ratio(i: u64) -> Result<f64, Error> {
    if i == 0 {
        return Err(Error::ZeroIndex);
    }
    let i = i as f64;
    Ok((0.5 * LN_2 + lgamma_positive((i + 1.0) / 2.0) - lgamma_positive(i / 2.0)).exp())
}

/// A Gamma ratio r_i together with the index it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRatio {
    pub index: u64,
    pub value: f64,
}

impl GammaRatio {
    pub fn new(index: u64) -> Result<Self, Error> {
        Ok(Self {
            index,
            value: gautschi_ratio(index)?,
        })
    }

    /// sqrt(i-1) <= r_i <= sqrt(i+1).
    pub fn within_gautschi_bounds(&self) -> bool {
        let i = self.index as f64;
        (i - 1.0).sqrt() <= self.value && self.value <= (i + 1.0).sqrt()
    }
}

/// A sum that may be too large for a plain double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumMagnitude {
    /// The value itself.
    Raw(f64),
    /// value = mantissa * 2^exp2 with mantissa in [1, 2).
    Log2Scaled { exp2: i64, mantissa: f64 },
}

impl SumMagnitude {
    fn from_normalized(n: u64, normalized: f64, raw_threshold: u64) -> Self {
        if n <= raw_threshold {
            return SumMagnitude::Raw(normalized * 2f64.powi(n as i32));
        }
        let log2 = n as f64 + normalized.log2();
        let exp2 = log2.floor() as i64;
        SumMagnitude::Log2Scaled {
            exp2,
            mantissa: 2f64.powf(log2 - exp2 as f64),
        }
    }

    /// log2 of the represented value (`-inf` for zero).
    pub fn log2_value(&self) -> f64 {
        match *self {
            SumMagnitude::Raw(v) => v.log2(),
            SumMagnitude::Log2Scaled { exp2, mantissa } => exp2 as f64 + mantissa.log2(),
        }
    }

    /// The value as a double; overflows to infinity when log2-scaled past
    /// the representable range.
    pub fn to_f64(&self) -> f64 {
        match *self {
            SumMagnitude::Raw(v) => v,
            SumMagnitude::Log2Scaled { exp2, mantissa } => mantissa * 2f64.powi(exp2 as i32),
        }
    }
}

/// Compensated accumulator; the binomial sums concentrate near k = n/2, so
/// plain left-to-right addition would lose digits on the small flanks.
#[derive(Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// 2^-n sum_{k=1}^{n} C(n,k) sqrt(k + offset), accumulated in ascending k
/// with the 2^-n weight folded into each exponent before exponentiation.
fn normalized_sqrt_sum(n: u64, offset: i64) -> f64 {
    let n_ln_2 = n as f64 * LN_2;
    let mut acc = KahanSum::default();
    for k in 1..=n {
        let weight = (k as i64 + offset) as f64;
        if weight <= 0.0 {
            continue; // sqrt(0) term of A_n
        }
        acc.add((ln_binomial(n, k) - n_ln_2 + 0.5 * weight.ln()).exp());
    }
    acc.value()
}

/// A_n = sum_{k=1}^{n} C(n,k) sqrt(k-1).
pub fn binomial_sum_a(n: u64) -> Result<SumMagnitude, Error> {
    binomial_sum_a_with_threshold(n, RAW_SUM_THRESHOLD)
}

/// [`binomial_sum_a`] with an explicit raw-representation threshold.
pub fn binomial_sum_a_with_threshold(n: u64, raw_threshold: u64) -> Result<SumMagnitude, Error> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok(SumMagnitude::from_normalized(
        n,
        normalized_sqrt_sum(n, -1),
        raw_threshold,
    ))
}

/// B_n = sum_{k=1}^{n} C(n,k) sqrt(k+1).
pub fn binomial_sum_b(n: u64) -> Result<SumMagnitude, Error> {
    binomial_sum_b_with_threshold(n, RAW_SUM_THRESHOLD)
}

/// [`binomial_sum_b`] with an explicit raw-representation threshold.
pub fn binomial_sum_b_with_threshold(n: u64, raw_threshold: u64) -> Result<SumMagnitude, Error> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok(SumMagnitude::from_normalized(
        n,
        normalized_sqrt_sum(n, 1),
        raw_threshold,
    ))
}

/// The pair (A_n, B_n); invariants: 0 <= A_n <= B_n and the sqrt-envelope
/// bounds checked by [`BinomialSumPair::within_envelope`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialSumPair {
    pub n: u64,
    pub a: SumMagnitude,
    pub b: SumMagnitude,
}

impl BinomialSumPair {
    pub fn new(n: u64) -> Result<Self, Error> {
        Ok(Self {
            n,
            a: binomial_sum_a(n)?,
            b: binomial_sum_b(n)?,
        })
    }

    /// A_n >= 2^n sqrt(n/2) (1 - 3/(2n) - 2/n^2) and
    /// B_n <= 2^n sqrt(n/2 + 1), compared on log2 values so the check works
    /// past the raw-representation threshold. The lower bound is vacuous
    /// (negative) for n <= 2.
    pub fn within_envelope(&self) -> bool {
        let lower_ok = match sum_lower_bound_log2(self.n) {
            None => true,
            Some(lo) => self.a.log2_value() >= lo,
        };
        lower_ok && self.b.log2_value() <= sum_upper_bound_log2(self.n)
    }
}

/// log2 of 2^n sqrt(n/2) (1 - 3/(2n) - 2/n^2), or `None` when the
/// parenthesized factor is not positive (n <= 2).
pub fn sum_lower_bound_log2(n: u64) -> Option<f64> {
    let nf = n as f64;
    let factor = 1.0 - 1.5 / nf - 2.0 / (nf * nf);
    if factor <= 0.0 {
        return None;
    }
    Some(nf + 0.5 * (nf / 2.0).log2() + factor.log2())
}

/// log2 of 2^n sqrt(n/2 + 1).
pub fn sum_upper_bound_log2(n: u64) -> f64 {
    let nf = n as f64;
    nf + 0.5 * (nf / 2.0 + 1.0).log2()
}

/// M_n = sum_{i=1}^{n} C(n,i) 2^-n r_i: the expected Euclidean norm of a
/// ReLU applied to a standard n-dimensional Gaussian. Approaches sqrt(n/2)
/// from within the square-root envelope of A_n and B_n as n grows.
pub fn norm_growth_factor(n: u64) -> Result<f64, Error> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    // Past the cutoff, restrict to a +-20 sqrt(n) window around the binomial
    // mean n/2: the discarded tail mass is below exp(-800), and r_i at most
    // sqrt(n+1), so the truncation error is far beyond representable.
    const WINDOW_CUTOFF: u64 = 2048;
    let (lo, hi) = if n <= WINDOW_CUTOFF {
        (1, n)
    } else {
        let half_width = (20.0 * (n as f64).sqrt()).ceil() as u64 + 2;
        let mid = n / 2;
        (mid.saturating_sub(half_width).max(1), (mid + half_width).min(n))
    };
    let n_ln_2 = n as f64 * LN_2;
    let mut acc = KahanSum::default();
    for i in lo..=hi {
        let fi = i as f64;
        let ln_r = 0.5 * LN_2 + lgamma_positive((fi + 1.0) / 2.0) - lgamma_positive(fi / 2.0);
        acc.add((ln_binomial(n, i) - n_ln_2 + ln_r).exp());
    }
    Ok(acc.value())
}
