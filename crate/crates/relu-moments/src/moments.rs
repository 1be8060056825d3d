//! Closed-form moment predictions for ReLU networks at initialization.
//!
//! For a network with widths `(n_0, ..., n_L)`, unit-free input direction of
//! norm `||x||`, and layer-`l` weights drawn i.i.d. from `N(0, beta_l^2)`,
//! the scale factor
//!
//! ```text
//! S_k = ||x|| / sqrt(2 pi) * prod_{l=1}^{k-1} sqrt(n_l / 2) * prod_{l=1}^{k} beta_l
//! ```
//!
//! controls every hidden-layer moment: the activation mean equals `S_k` up to
//! a per-layer factor that tends to one as widths grow
//! ([`first_moment_exact`]), the second moment is exactly `pi * S_k^2`
//! ([`second_moment`]), and the activation variance is sandwiched between
//! `(pi - (1 +- eps)^2) S_k^2` when the widths clear [`width_condition`].
//! Backward derivatives have mean zero and an exact second moment given by
//! [`backward_variance`].
//!
//! `S_k` is preserved across layer k exactly when `beta_k^2 = 2 / n_{k-1}`
//! (fan-in scaling), and the backward variance exactly when
//! `beta_k^2 = 2 / n_k` (fan-out scaling); [`schedule_characterization`]
//! reports both sides of each equivalence so they can be cross-checked.
//!
//! All products are accumulated as sums of logarithms, so predictions stay
//! finite and positive for widths up to 10^6 and depths in the thousands.

use crate::combinatorics::{self, norm_growth_factor};

use std::collections::HashMap;
use std::f64::consts::PI;

/// Relative tolerance for the equality flags in [`schedule_characterization`].
pub const SCHEDULE_EQ_TOL: f64 = 1e-12;

/// Default constant `c` in the width condition `min n_l >= c k / ln(1+eps)`.
///
/// With c = 2 the guaranteed per-layer growth-factor slack
/// `3/(2n) + 2/n^2` summed over k-1 layers stays below eps, and the upper
/// envelope `(1 + 2/n)^{(k-1)/2}` below `1 + eps`, so the first-moment
/// bracket of [`first_moment_bounds`] provably contains
/// [`first_moment_exact`] whenever the condition holds.
pub const DEFAULT_WIDTH_CONSTANT: f64 = 2.0;

const LN_2PI: f64 = 1.8378770664093455;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("network needs at least two layers of weights, got {0} widths")]
    TooShallow(usize),
    #[error("layer widths must be positive")]
    ZeroWidth,
    #[error("output width must be 1, got {0}")]
    OutputNotScalar(usize),
    #[error("schedule needs {expected} entries (one std-dev per weight layer), got {got}")]
    ScheduleLength { expected: usize, got: usize },
    #[error("weight std-devs must be positive and finite")]
    BadBeta(f64),
    #[error("layer index {k} outside the valid range [{lo}, {hi}]")]
    LayerOutOfRange { k: usize, lo: usize, hi: usize },
    #[error("input norm must be positive and finite, got {0}")]
    BadNorm(f64),
    #[error("eps must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("width constant must be positive, got {0}")]
    BadWidthConstant(f64),
    #[error(transparent)]
    Combinatorics(#[from] combinatorics::Error),
}

/// Layer widths `(n_0, ..., n_L)` of a scalar-output network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    widths: Vec<usize>,
}

impl NetworkShape {
    /// `widths[0]` is the input dimension, `widths[L]` the (scalar) output.
    pub fn new(widths: Vec<usize>) -> Result<Self, Error> {
        if widths.len() < 3 {
            return Err(Error::TooShallow(widths.len()));
        }
        if widths.contains(&0) {
            return Err(Error::ZeroWidth);
        }
        let last = *widths.last().expect("non-empty");
        if last != 1 {
            return Err(Error::OutputNotScalar(last));
        }
        Ok(Self { widths })
    }

    /// Number of weight layers L.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// n_l for l in [0, L].
    pub fn width(&self, l: usize) -> usize {
        self.widths[l]
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }
}

/// Per-layer weight standard deviations `(beta_1, ..., beta_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSchedule {
    betas: Vec<f64>,
}

impl InitSchedule {
    pub fn custom(shape: &NetworkShape, betas: Vec<f64>) -> Result<Self, Error> {
        if betas.len() != shape.depth() {
            return Err(Error::ScheduleLength {
                expected: shape.depth(),
                got: betas.len(),
            });
        }
        if let Some(&bad) = betas.iter().find(|b| !b.is_finite() || **b <= 0.0) {
            return Err(Error::BadBeta(bad));
        }
        Ok(Self { betas })
    }

    /// Fan-in scaling `beta_l^2 = 2 / n_{l-1}`: preserves forward moments.
    pub fn fan_in(shape: &NetworkShape) -> Self {
        let betas = (1..=shape.depth())
            .map(|l| (2.0 / shape.width(l - 1) as f64).sqrt())
            .collect();
        Self { betas }
    }

    /// Fan-out scaling `beta_l^2 = 2 / n_l`: preserves backward variance.
    pub fn fan_out(shape: &NetworkShape) -> Self {
        let betas = (1..=shape.depth())
            .map(|l| (2.0 / shape.width(l) as f64).sqrt())
            .collect();
        Self { betas }
    }

    /// beta_l for l in [1, L].
    pub fn beta(&self, l: usize) -> f64 {
        self.betas[l - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

fn check_pair(shape: &NetworkShape, sched: &InitSchedule) -> Result<(), Error> {
    if sched.betas.len() != shape.depth() {
        return Err(Error::ScheduleLength {
            expected: shape.depth(),
            got: sched.betas.len(),
        });
    }
    Ok(())
}

fn check_norm(x_norm: f64) -> Result<(), Error> {
    if !x_norm.is_finite() || x_norm <= 0.0 {
        return Err(Error::BadNorm(x_norm));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<(), Error> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadEpsilon(eps));
    }
    Ok(())
}

fn check_layer(k: usize, lo: usize, hi: usize) -> Result<(), Error> {
    if k < lo || k > hi {
        return Err(Error::LayerOutOfRange { k, lo, hi });
    }
    Ok(())
}

/// ln S_k. The scale factor itself is defined for every k in [1, L].
fn ln_s_k(shape: &NetworkShape, sched: &InitSchedule, x_norm: f64, k: usize) -> f64 {
    let mut acc = x_norm.ln() - 0.5 * LN_2PI;
    for l in 1..k {
        acc += 0.5 * (shape.width(l) as f64 / 2.0).ln();
    }
    for l in 1..=k {
        acc += sched.beta(l).ln();
    }
    acc
}

/// The scale factor S_k, for k in [1, L].
pub fn s_k(shape: &NetworkShape, sched: &InitSchedule, x_norm: f64, k: usize) -> Result<f64, Error> {
    check_pair(shape, sched)?;
    check_norm(x_norm)?;
    check_layer(k, 1, shape.depth())?;
    Ok(ln_s_k(shape, sched, x_norm, k).exp())
}

fn ln_first_moment(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    k: usize,
    growth_cache: &mut HashMap<usize, f64>,
) -> Result<f64, Error> {
    let mut acc = x_norm.ln() - 0.5 * LN_2PI + sched.beta(k).ln();
    for l in 1..k {
        let n_l = shape.width(l);
        let m = match growth_cache.get(&n_l) {
            Some(&m) => m,
            None => {
                let m = norm_growth_factor(n_l as u64)?;
                growth_cache.insert(n_l, m);
                m
            }
        };
        acc += sched.beta(l).ln() + m.ln();
    }
    Ok(acc)
}

/// Exact activation mean
/// `E[f_{k,p}] = ||x|| / sqrt(2 pi) * beta_k * prod_{l<k} beta_l M_{n_l}`,
/// where `M_n` is [`norm_growth_factor`]. Hidden layers only (k <= L-1).
pub fn first_moment_exact(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    k: usize,
) -> Result<f64, Error> {
    check_pair(shape, sched)?;
    check_norm(x_norm)?;
    check_layer(k, 1, shape.depth() - 1)?;
    let mut cache = HashMap::new();
    Ok(ln_first_moment(shape, sched, x_norm, k, &mut cache)?.exp())
}

/// The bracket `((1 - eps) S_k, (1 + eps) S_k)` that contains the activation
/// mean whenever the width condition holds.
pub fn first_moment_bounds(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    k: usize,
    eps: f64,
) -> Result<(f64, f64), Error> {
    check_eps(eps)?;
    check_layer(k, 1, shape.depth() - 1)?;
    let s = s_k(shape, sched, x_norm, k)?;
    Ok(((1.0 - eps) * s, (1.0 + eps) * s))
}

/// Exact activation second moment
/// `E[f_{k,p}^2] = ||x||^2 / 2 * prod_{l<k} (n_l / 2) * prod_{l<=k} beta_l^2`,
/// which is identically `pi * S_k^2`. Hidden layers only.
pub fn second_moment(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    k: usize,
) -> Result<f64, Error> {
    check_pair(shape, sched)?;
    check_norm(x_norm)?;
    check_layer(k, 1, shape.depth() - 1)?;
    let mut acc = 2.0 * x_norm.ln() - std::f64::consts::LN_2;
    for l in 1..k {
        acc += (shape.width(l) as f64 / 2.0).ln();
    }
    for l in 1..=k {
        acc += 2.0 * sched.beta(l).ln();
    }
    Ok(acc.exp())
}

/// Variance sandwich `(pi - (1 + eps)^2) S_k^2 .. (pi - (1 - eps)^2) S_k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBounds {
    pub lo: f64,
    pub hi: f64,
    /// The lower bound turns negative once eps > sqrt(pi) - 1; it is still
    /// returned as-is because the statement stays true, just uninformative.
    pub lo_vacuous: bool,
}

/// Bounds on `var(f_{k,p})`, valid under the width condition.
pub fn variance_bounds(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    k: usize,
    eps: f64,
) -> Result<VarianceBounds, Error> {
    check_eps(eps)?;
    check_layer(k, 1, shape.depth() - 1)?;
    let s = s_k(shape, sched, x_norm, k)?;
    let s2 = s * s;
    let lo = (PI - (1.0 + eps) * (1.0 + eps)) * s2;
    let hi = (PI - (1.0 - eps) * (1.0 - eps)) * s2;
    Ok(VarianceBounds {
        lo,
        hi,
        lo_vacuous: lo < 0.0,
    })
}

fn ln_backward_variance(shape: &NetworkShape, sched: &InitSchedule, k: usize) -> f64 {
    let depth = shape.depth();
    let mut acc = -std::f64::consts::LN_2;
    for l in (k + 1)..depth {
        acc += (shape.width(l) as f64 / 2.0).ln();
    }
    for l in (k + 1)..=depth {
        acc += 2.0 * sched.beta(l).ln();
    }
    acc
}

/// Exact backward-derivative variance
/// `var(delta_{k,p}) = E[delta_{k,p}^2]
///   = 1/2 * prod_{l=k+1}^{L-1} (n_l / 2) * prod_{l=k+1}^{L} beta_l^2`.
pub fn backward_variance(
    shape: &NetworkShape,
    sched: &InitSchedule,
    k: usize,
) -> Result<f64, Error> {
    check_pair(shape, sched)?;
    check_layer(k, 1, shape.depth() - 1)?;
    Ok(ln_backward_variance(shape, sched, k).exp())
}

/// Both sides of the two preservation equivalences at one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleCheck {
    pub k: usize,
    /// beta_k^2 = 2 / n_{k-1} within tolerance.
    pub fan_in_beta_match: bool,
    /// S_k = S_{k-1} within tolerance (compared through the log route).
    pub forward_scale_preserved: bool,
    /// beta_k^2 = 2 / n_k within tolerance.
    pub fan_out_beta_match: bool,
    /// backward_variance(k) = backward_variance(k-1) within tolerance.
    pub backward_variance_preserved: bool,
}

/// Evaluate the preservation equivalences for every k in [2, L-1] at
/// [`SCHEDULE_EQ_TOL`]. The beta flags and the scale/variance flags are
/// computed through independent routes and must always agree.
pub fn schedule_characterization(
    shape: &NetworkShape,
    sched: &InitSchedule,
) -> Result<Vec<ScheduleCheck>, Error> {
    schedule_characterization_with_tol(shape, sched, SCHEDULE_EQ_TOL)
}

/// [`schedule_characterization`] with an explicit relative tolerance.
pub fn schedule_characterization_with_tol(
    shape: &NetworkShape,
    sched: &InitSchedule,
    tol: f64,
) -> Result<Vec<ScheduleCheck>, Error> {
    check_pair(shape, sched)?;
    let depth = shape.depth();
    let mut checks = Vec::new();
    for k in 2..depth {
        let beta_sq = sched.beta(k) * sched.beta(k);
        let fan_in_beta_match = (beta_sq * shape.width(k - 1) as f64 / 2.0 - 1.0).abs() <= tol;
        let fan_out_beta_match = (beta_sq * shape.width(k) as f64 / 2.0 - 1.0).abs() <= tol;
        // Scale equality is measured on the squared ratio so both flags test
        // the same algebraic quantity: (S_k / S_{k-1})^2 = beta_k^2 n_{k-1}/2.
        let ln_ratio =
            ln_s_k(shape, sched, 1.0, k) - ln_s_k(shape, sched, 1.0, k - 1);
        let forward_scale_preserved = ((2.0 * ln_ratio).exp() - 1.0).abs() <= tol;
        let ln_bv_ratio =
            ln_backward_variance(shape, sched, k - 1) - ln_backward_variance(shape, sched, k);
        let backward_variance_preserved = (ln_bv_ratio.exp() - 1.0).abs() <= tol;
        checks.push(ScheduleCheck {
            k,
            fan_in_beta_match,
            forward_scale_preserved,
            fan_out_beta_match,
            backward_variance_preserved,
        });
    }
    Ok(checks)
}

/// True when `min_{l in [1, k-1]} n_l >= c * k / ln(1 + eps)`; vacuously true
/// for k = 1. The constant c is caller-supplied ([`DEFAULT_WIDTH_CONSTANT`]).
pub fn width_condition(
    shape: &NetworkShape,
    k: usize,
    eps: f64,
    c: f64,
) -> Result<bool, Error> {
    check_eps(eps)?;
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::BadWidthConstant(c));
    }
    check_layer(k, 1, shape.depth())?;
    let min_width = (1..k).map(|l| shape.width(l)).min();
    match min_width {
        None => Ok(true),
        Some(m) => Ok(m as f64 >= c * k as f64 / (1.0 + eps).ln()),
    }
}

/// Every prediction for one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPrediction {
    pub k: usize,
    pub s_k: f64,
    pub first_moment_exact: f64,
    pub first_moment_lo: f64,
    pub first_moment_hi: f64,
    pub second_moment: f64,
    pub variance_lo: f64,
    pub variance_hi: f64,
    pub variance_lo_vacuous: bool,
    pub backward_variance: f64,
    /// Whether the width condition held for this layer at the configured
    /// (eps, c); the first-moment and variance brackets are only guaranteed
    /// when it does.
    pub width_ok: bool,
}

/// Predictions for every hidden layer k in [1, L-1].
pub fn predictions(
    shape: &NetworkShape,
    sched: &InitSchedule,
    x_norm: f64,
    eps: f64,
    width_constant: f64,
) -> Result<Vec<MomentPrediction>, Error> {
    check_pair(shape, sched)?;
    check_norm(x_norm)?;
    check_eps(eps)?;
    let mut growth_cache = HashMap::new();
    let mut out = Vec::with_capacity(shape.depth() - 1);
    for k in 1..shape.depth() {
        let s = ln_s_k(shape, sched, x_norm, k).exp();
        let first = ln_first_moment(shape, sched, x_norm, k, &mut growth_cache)?.exp();
        let vb = variance_bounds(shape, sched, x_norm, k, eps)?;
        out.push(MomentPrediction {
            k,
            s_k: s,
            first_moment_exact: first,
            first_moment_lo: (1.0 - eps) * s,
            first_moment_hi: (1.0 + eps) * s,
            second_moment: second_moment(shape, sched, x_norm, k)?,
            variance_lo: vb.lo,
            variance_hi: vb.hi,
            variance_lo_vacuous: vb.lo_vacuous,
            backward_variance: backward_variance(shape, sched, k)?,
            width_ok: width_condition(shape, k, eps, width_constant)?,
        });
    }
    Ok(out)
}
