//! Sampling and exact evaluation of ReLU networks at initialization.
//!
//! [`sample_weights`] draws every matrix entry from the counter-based stream
//! in [`crate::rng`], so a sample is a pure function of (seed, shape,
//! schedule) and any entry can be reproduced in isolation. [`forward`] keeps
//! the full trace of pre-activations and activations;
//! [`output_gradient_full`] computes the derivative of the scalar output with
//! respect to every hidden pre-activation in one reverse sweep, and
//! [`backward_delta`] the same quantity for a single neuron via the explicit
//! masked product of weight matrices.
//!
//! The ReLU derivative at zero is taken to be 0 (the left derivative). Under
//! Gaussian weights a pre-activation only sits exactly at zero when an entire
//! upstream layer is dead, so the choice is invisible except on those events.

use crate::moments::{InitSchedule, NetworkShape};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("input has length {got}, network expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("matrix {index} has dimensions {got_rows}x{got_cols}, expected {rows}x{cols}")]
    MatrixShape {
        index: usize,
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("layer index {k} outside [1, {max}]")]
    LayerOutOfRange { k: usize, max: usize },
    #[error("neuron index {p} outside [1, {max}] at layer {k}")]
    NeuronOutOfRange { k: usize, p: usize, max: usize },
}

/// Dense row-major matrix, rows = fan-in, cols = fan-out.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = x^T W for a row vector x of length `rows`.
    fn vec_mat(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (yj, &wij) in y.iter_mut().zip(self.row(i)) {
                *yj += xi * wij;
            }
        }
    }
}

/// One draw of all weight matrices `W_1..W_L`; matrix l is n_{l-1} x n_l.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    shape: NetworkShape,
    seed: u64,
    matrices: Vec<Mat>,
}

/// The standard-normal factor of entry (i, j) of matrix `layer` (1-based
/// layer, 0-based entry indices). Exposed so tests and tools can reproduce
/// any single entry without sampling the whole network.
pub fn weight_entry_normal(seed: u64, layer: usize, i: usize, j: usize, cols: usize) -> f64 {
    rng::standard_normal(seed, layer as u64, (i * cols + j) as u64)
}

/// Draw every entry of `W_l` as `beta_l * z` with z standard normal, keyed by
/// (seed, l, entry index). Deterministic and traversal-order independent.
pub fn sample_weights(shape: &NetworkShape, sched: &InitSchedule, seed: u64) -> WeightSample {
    let depth = shape.depth();
    let mut matrices = Vec::with_capacity(depth);
    for l in 1..=depth {
        let rows = shape.width(l - 1);
        let cols = shape.width(l);
        let beta = sched.beta(l);
        let base = rng::stream_base(seed, l as u64);
        let count = rows * cols;
        let mut data = Vec::with_capacity(count);
        for pair in 0..(count as u64).div_ceil(2) {
            let (z0, z1) = rng::normal_pair_at(base, pair);
            data.push(beta * z0);
            if data.len() < count {
                data.push(beta * z1);
            }
        }
        matrices.push(Mat {
            rows,
            cols,
            data,
        });
    }
    WeightSample {
        shape: shape.clone(),
        seed,
        matrices,
    }
}

impl WeightSample {
    /// Build from explicit matrices; dimensions must match the shape.
    pub fn from_matrices(shape: &NetworkShape, matrices: Vec<Mat>) -> Result<Self, Error> {
        if matrices.len() != shape.depth() {
            return Err(Error::LayerOutOfRange {
                k: matrices.len(),
                max: shape.depth(),
            });
        }
        for (idx, m) in matrices.iter().enumerate() {
            let (rows, cols) = (shape.width(idx), shape.width(idx + 1));
            if m.rows != rows || m.cols != cols {
                return Err(Error::MatrixShape {
                    index: idx + 1,
                    rows,
                    cols,
                    got_rows: m.rows,
                    got_cols: m.cols,
                });
            }
        }
        Ok(Self {
            shape: shape.clone(),
            seed: 0,
            matrices,
        })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// W_l for l in [1, L].
    pub fn matrix(&self, l: usize) -> &Mat {
        &self.matrices[l - 1]
    }
}

/// Full forward record: input, every pre-activation `g_l`, every activation
/// `f_l = max(0, g_l)` (the output layer is linear, `f_L = g_L`).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    input: Vec<f64>,
    pre_activations: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    /// f_0 = x.
    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// g_l for l in [1, L].
    pub fn pre_activation(&self, l: usize) -> &[f64] {
        &self.pre_activations[l - 1]
    }

    /// f_l for l in [0, L]; f_0 is the input.
    pub fn activation(&self, l: usize) -> &[f64] {
        if l == 0 {
            &self.input
        } else {
            &self.activations[l - 1]
        }
    }

    /// The scalar network output f_L.
    pub fn output(&self) -> f64 {
        self.activations.last().expect("depth >= 2")[0]
    }

    pub fn depth(&self) -> usize {
        self.pre_activations.len()
    }
}

/// Per-layer ReLU derivative indicators `diag(sigma'(g_l))` for the hidden
/// layers; an entry is 1 exactly when the pre-activation is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationMask {
    layers: Vec<Vec<bool>>,
}

impl ActivationMask {
    pub fn from_trace(trace: &ForwardTrace) -> Self {
        let layers = (1..trace.depth())
            .map(|l| trace.pre_activation(l).iter().map(|&g| g > 0.0).collect())
            .collect();
        Self { layers }
    }

    /// Mask of hidden layer l, l in [1, L-1].
    pub fn layer(&self, l: usize) -> &[bool] {
        &self.layers[l - 1]
    }
}

#[inline]
fn relu(g: f64) -> f64 {
    if g > 0.0 {
        g
    } else {
        0.0
    }
}

#[inline]
fn relu_mask(g: f64) -> f64 {
    if g > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Run the network forward, retaining all intermediate vectors.
pub fn forward(weights: &WeightSample, x: &[f64]) -> Result<ForwardTrace, Error> {
    let shape = &weights.shape;
    if x.len() != shape.input_dim() {
        return Err(Error::InputLength {
            expected: shape.input_dim(),
            got: x.len(),
        });
    }
    let depth = shape.depth();
    let mut pre_activations = Vec::with_capacity(depth);
    let mut activations = Vec::with_capacity(depth);
    let mut current = x.to_vec();
    for l in 1..=depth {
        let w = weights.matrix(l);
        let mut g = vec![0.0; w.cols];
        w.vec_mat(&current, &mut g);
        let f: Vec<f64> = if l < depth {
            g.iter().map(|&v| relu(v)).collect()
        } else {
            g.clone()
        };
        pre_activations.push(g);
        current = f.clone();
        activations.push(f);
    }
    Ok(ForwardTrace {
        input: x.to_vec(),
        pre_activations,
        activations,
    })
}

/// d f_L / d g_{k,p} for one neuron, evaluated as the masked product
/// `sigma'(g_{k,p}) * (W_{k+1})_{p,:} Sigma_{k+1} W_{k+2} Sigma_{k+2} ... W_L`
/// using running vector-matrix products (no full Jacobians).
pub fn backward_delta(
    weights: &WeightSample,
    trace: &ForwardTrace,
    k: usize,
    p: usize,
) -> Result<f64, Error> {
    let depth = weights.shape.depth();
    if k < 1 || k >= depth {
        return Err(Error::LayerOutOfRange { k, max: depth - 1 });
    }
    let n_k = weights.shape.width(k);
    if p < 1 || p > n_k {
        return Err(Error::NeuronOutOfRange { k, p, max: n_k });
    }
    let gate = relu_mask(trace.pre_activation(k)[p - 1]);
    if k == depth - 1 {
        return Ok(gate * weights.matrix(depth).at(p - 1, 0));
    }
    // v over layer k+1: the p-th row of W_{k+1}, gated and masked.
    let w_next = weights.matrix(k + 1);
    let mask = trace.pre_activation(k + 1);
    let mut v: Vec<f64> = w_next
        .row(p - 1)
        .iter()
        .zip(mask)
        .map(|(&w, &g)| gate * w * relu_mask(g))
        .collect();
    for l in (k + 2)..depth {
        let w = weights.matrix(l);
        let mut next = vec![0.0; w.cols];
        w.vec_mat(&v, &mut next);
        for (nv, &g) in next.iter_mut().zip(trace.pre_activation(l)) {
            *nv *= relu_mask(g);
        }
        v = next;
    }
    let w_last = weights.matrix(depth);
    Ok(v
        .iter()
        .enumerate()
        .map(|(i, &vi)| vi * w_last.at(i, 0))
        .sum())
}

/// All backward derivatives in one reverse sweep: element (k-1, p-1) of the
/// result is d f_L / d g_{k,p}, for every hidden layer k in [1, L-1].
pub fn output_gradient_full(weights: &WeightSample, trace: &ForwardTrace) -> Vec<Vec<f64>> {
    let depth = weights.shape.depth();
    let mut deltas = vec![Vec::new(); depth - 1];
    // d_{L-1} = Sigma_{L-1} W_L (a column).
    let w_last = weights.matrix(depth);
    let mut d: Vec<f64> = trace
        .pre_activation(depth - 1)
        .iter()
        .enumerate()
        .map(|(j, &g)| relu_mask(g) * w_last.at(j, 0))
        .collect();
    deltas[depth - 2] = d.clone();
    for k in (1..depth - 1).rev() {
        let w = weights.matrix(k + 1);
        let g_k = trace.pre_activation(k);
        let mut next = vec![0.0; w.rows];
        for (i, slot) in next.iter_mut().enumerate() {
            if relu_mask(g_k[i]) == 0.0 {
                continue;
            }
            *slot = w.row(i).iter().zip(&d).map(|(&wij, &dj)| wij * dj).sum();
        }
        deltas[k - 1] = next.clone();
        d = next;
    }
    deltas
}

/// Re-run layers k..L with the stored pre-activation g_{k,p} shifted by `h`
/// and return the new scalar output. This is the probe a central
/// finite-difference gradient check is built from.
pub fn nudged_output(
    weights: &WeightSample,
    trace: &ForwardTrace,
    k: usize,
    p: usize,
    h: f64,
) -> Result<f64, Error> {
    let depth = weights.shape.depth();
    if k < 1 || k >= depth {
        return Err(Error::LayerOutOfRange { k, max: depth - 1 });
    }
    let n_k = weights.shape.width(k);
    if p < 1 || p > n_k {
        return Err(Error::NeuronOutOfRange { k, p, max: n_k });
    }
    let mut f: Vec<f64> = trace
        .pre_activation(k)
        .iter()
        .enumerate()
        .map(|(j, &g)| relu(if j == p - 1 { g + h } else { g }))
        .collect();
    for l in (k + 1)..=depth {
        let w = weights.matrix(l);
        let mut g = vec![0.0; w.cols()];
        w.vec_mat(&f, &mut g);
        f = if l < depth {
            g.iter().map(|&v| relu(v)).collect()
        } else {
            g
        };
    }
    Ok(f[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{InitSchedule, NetworkShape};

    fn shape(widths: &[usize]) -> NetworkShape {
        NetworkShape::new(widths.to_vec()).unwrap()
    }

    fn ones(shape: &NetworkShape) -> InitSchedule {
        InitSchedule::custom(shape, vec![1.0; shape.depth()]).unwrap()
    }

    fn random_input(seed: u64, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| crate::rng::standard_normal(seed, 999, i as u64))
            .collect()
    }

    #[test]
    fn sampling_is_deterministic_with_correct_dims() {
        let s = shape(&[3, 5, 1]);
        let sched = ones(&s);
        let a = sample_weights(&s, &sched, 42);
        let b = sample_weights(&s, &sched, 42);
        assert_eq!(a, b);
        assert_eq!((a.matrix(1).rows(), a.matrix(1).cols()), (3, 5));
        assert_eq!((a.matrix(2).rows(), a.matrix(2).cols()), (5, 1));
        let c = sample_weights(&s, &sched, 43);
        assert_ne!(a.matrix(1).at(0, 0), c.matrix(1).at(0, 0));
    }

    #[test]
    fn entries_reproducible_in_isolation() {
        let s = shape(&[4, 7, 3, 1]);
        let sched = InitSchedule::custom(&s, vec![0.5, 2.0, 1.0]).unwrap();
        let sample = sample_weights(&s, &sched, 7);
        for l in 1..=3 {
            let m = sample.matrix(l);
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let direct =
                        sched.beta(l) * weight_entry_normal(7, l, i, j, m.cols());
                    assert_eq!(m.at(i, j), direct, "layer {l} entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn sampled_entry_moments() {
        // 10^6 draws of entry (1,1,1) across seeds: mean within 4 SE of 0,
        // variance within 4 SE of 1.
        let s = shape(&[2, 2, 1]);
        let sched = ones(&s);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for seed in 0..n {
            let v = sample_weights(&s, &sched, seed).matrix(1).at(0, 0);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn forward_hand_case() {
        let s = shape(&[1, 1, 1]);
        let w = WeightSample::from_matrices(
            &s,
            vec![Mat::from_rows(vec![vec![2.0]]), Mat::from_rows(vec![vec![3.0]])],
        )
        .unwrap();
        let t = forward(&w, &[1.0]).unwrap();
        assert_eq!(t.pre_activation(1), &[2.0]);
        assert_eq!(t.activation(1), &[2.0]);
        assert_eq!(t.output(), 6.0);
        let t = forward(&w, &[-1.0]).unwrap();
        assert_eq!(t.activation(1), &[0.0]);
        assert_eq!(t.output(), 0.0);
        assert!(forward(&w, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn nonnegative_weights_leave_relu_inactive() {
        let s = shape(&[3, 4, 2, 1]);
        let sched = ones(&s);
        let mut sample = sample_weights(&s, &sched, 11);
        for m in &mut sample.matrices {
            for v in &mut m.data {
                *v = v.abs();
            }
        }
        let x = [0.5, 1.0, 2.0];
        let t = forward(&sample, &x).unwrap();
        for l in 1..=2 {
            assert_eq!(t.activation(l), t.pre_activation(l));
        }
    }

    #[test]
    fn activations_match_relu_of_preactivations() {
        let s = shape(&[5, 6, 4, 1]);
        let sched = ones(&s);
        for seed in 0..50 {
            let sample = sample_weights(&s, &sched, seed);
            let x = random_input(seed, 5);
            let t = forward(&sample, &x).unwrap();
            for l in 1..=2 {
                for (f, g) in t.activation(l).iter().zip(t.pre_activation(l)) {
                    assert_eq!(*f, g.max(0.0));
                }
            }
            assert_eq!(t.output(), t.pre_activation(3)[0]);
            let mask = ActivationMask::from_trace(&t);
            for l in 1..=2 {
                for (m, g) in mask.layer(l).iter().zip(t.pre_activation(l)) {
                    assert_eq!(*m, *g > 0.0);
                }
            }
        }
    }

    #[test]
    fn backward_hand_case() {
        let s = shape(&[1, 1, 1]);
        let w = WeightSample::from_matrices(
            &s,
            vec![Mat::from_rows(vec![vec![2.0]]), Mat::from_rows(vec![vec![3.0]])],
        )
        .unwrap();
        let t = forward(&w, &[1.0]).unwrap();
        assert_eq!(backward_delta(&w, &t, 1, 1).unwrap(), 3.0);
        assert_eq!(output_gradient_full(&w, &t), vec![vec![3.0]]);
        let t = forward(&w, &[-1.0]).unwrap();
        assert_eq!(backward_delta(&w, &t, 1, 1).unwrap(), 0.0);
        assert!(backward_delta(&w, &t, 2, 1).is_err());
        assert!(backward_delta(&w, &t, 1, 2).is_err());
    }

    #[test]
    fn all_masks_active_reduces_to_weight_product() {
        // Positive weights and input keep every gate open, so delta is the
        // plain product of the remaining weight matrices.
        let s = shape(&[2, 3, 2, 1]);
        let sched = ones(&s);
        let mut sample = sample_weights(&s, &sched, 3);
        for m in &mut sample.matrices {
            for v in &mut m.data {
                *v = v.abs() + 0.1;
            }
        }
        let t = forward(&sample, &[1.0, 2.0]).unwrap();
        let (w2, w3) = (sample.matrix(2), sample.matrix(3));
        for p in 1..=3 {
            let want: f64 = (0..2)
                .map(|j| w2.at(p - 1, j) * w3.at(j, 0))
                .sum();
            let got = backward_delta(&sample, &t, 1, p).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn reverse_sweep_matches_per_neuron_products() {
        for seed in 0..100u64 {
            let widths = match seed % 4 {
                0 => vec![3, 5, 1],
                1 => vec![2, 4, 3, 1],
                2 => vec![6, 2, 5, 3, 1],
                _ => vec![1, 8, 8, 1],
            };
            let s = shape(&widths);
            let sched = InitSchedule::fan_in(&s);
            let sample = sample_weights(&s, &sched, seed);
            let x = random_input(seed, s.input_dim());
            let t = forward(&sample, &x).unwrap();
            let all = output_gradient_full(&sample, &t);
            for k in 1..s.depth() {
                for p in 1..=s.width(k) {
                    let single = backward_delta(&sample, &t, k, p).unwrap();
                    let swept = all[k - 1][p - 1];
                    assert!(
                        (single - swept).abs() <= 1e-12 * single.abs().max(1e-300),
                        "seed {seed} k {k} p {p}: {single} vs {swept}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_input_kills_every_delta() {
        let s = shape(&[3, 4, 4, 1]);
        let sample = sample_weights(&s, &ones(&s), 5);
        let t = forward(&sample, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.output(), 0.0);
        for layer in output_gradient_full(&sample, &t) {
            assert!(layer.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn positive_homogeneity() {
        // Scaling the input by lambda > 0 scales every activation by lambda
        // and leaves every delta unchanged (the masks cannot flip).
        let s = shape(&[4, 6, 5, 1]);
        let sample = sample_weights(&s, &InitSchedule::fan_out(&s), 17);
        let x = random_input(17, 4);
        let t = forward(&sample, &x).unwrap();
        for lambda in [0.25, 3.0, 64.0] {
            let xs: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let ts = forward(&sample, &xs).unwrap();
            for l in 1..=s.depth() {
                for (a, b) in ts.activation(l).iter().zip(t.activation(l)) {
                    assert!((a - lambda * b).abs() <= 1e-12 * (lambda * b).abs().max(1e-300));
                }
            }
            let (da, db) = (
                output_gradient_full(&sample, &ts),
                output_gradient_full(&sample, &t),
            );
            assert_eq!(da, db);
        }
    }

    #[test]
    fn hidden_permutation_invariance() {
        // Permuting the neurons of a hidden layer together with the adjoining
        // weight columns/rows leaves the output and the delta multiset alone.
        let s = shape(&[3, 4, 2, 1]);
        let sample = sample_weights(&s, &ones(&s), 23);
        let x = random_input(23, 3);
        let t = forward(&sample, &x).unwrap();
        let deltas = output_gradient_full(&sample, &t);

        let perm = [2usize, 0, 3, 1]; // new position of each layer-1 neuron
        let w1 = sample.matrix(1);
        let w2 = sample.matrix(2);
        let mut w1p = Mat::zeros(3, 4);
        let mut w2p = Mat::zeros(4, 2);
        for (j, &pj) in perm.iter().enumerate() {
            for i in 0..3 {
                w1p.data[i * 4 + pj] = w1.at(i, j);
            }
            for c in 0..2 {
                w2p.data[pj * 2 + c] = w2.at(j, c);
            }
        }
        let permuted =
            WeightSample::from_matrices(&s, vec![w1p, w2p, sample.matrix(3).clone()]).unwrap();
        let tp = forward(&permuted, &x).unwrap();
        assert!((tp.output() - t.output()).abs() <= 1e-12 * t.output().abs().max(1e-300));
        let dp = output_gradient_full(&permuted, &tp);
        for j in 0..4 {
            let (a, b) = (dp[0][perm[j]], deltas[0][j]);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        for j in 0..2 {
            let (a, b) = (dp[1][j], deltas[1][j]);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn finite_difference_spot_check() {
        // Small version of the acceptance-level gradient check.
        let h = 1e-6;
        let mut checked = 0;
        for seed in 0..40u64 {
            let widths = match seed % 3 {
                0 => vec![2, 3, 1],
                1 => vec![3, 4, 2, 1],
                _ => vec![2, 2, 3, 2, 1],
            };
            let s = shape(&widths);
            let sample = sample_weights(&s, &InitSchedule::fan_in(&s), seed);
            let x = random_input(seed, s.input_dim());
            let t = forward(&sample, &x).unwrap();
            // Skip draws where a pre-activation sits near a mask boundary.
            let near_flip = (1..s.depth())
                .any(|l| t.pre_activation(l).iter().any(|g| g.abs() < 10.0 * h));
            if near_flip {
                continue;
            }
            for k in 1..s.depth() {
                for p in 1..=s.width(k) {
                    let delta = backward_delta(&sample, &t, k, p).unwrap();
                    let up = nudged_output(&sample, &t, k, p, h).unwrap();
                    let down = nudged_output(&sample, &t, k, p, -h).unwrap();
                    let fd = (up - down) / (2.0 * h);
                    let scale = delta.abs().max(fd.abs()).max(1e-12);
                    assert!(
                        (delta - fd).abs() / scale <= 1e-5,
                        "seed {seed} k {k} p {p}: {delta} vs {fd}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "too few gradient checks ran: {checked}");
    }
}
