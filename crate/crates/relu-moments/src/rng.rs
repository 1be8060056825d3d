//! Counter-based random numbers keyed by (seed, stream, counter).
//!
//! Every draw is a pure function of its key, so parallel trials can sample
//! the same weights no matter how work is split across workers, and a single
//! matrix entry can be recomputed in isolation. The generator is the
//! splitmix64 output function applied to a keyed counter sequence.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const SEED_SALT: u64 = 0x8e98_82f1_4229_65df;

/// splitmix64 finalizer: bijective, passes BigCrush as a counter generator.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Base state for a (seed, stream) pair; counters advance from here.
#[inline]
pub fn stream_base(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ SEED_SALT) ^ stream.wrapping_mul(STREAM_SALT))
}

/// The `counter`-th 64-bit word of the stream.
#[inline]
pub fn word_at(base: u64, counter: u64) -> u64 {
    mix64(base.wrapping_add(counter.wrapping_mul(GOLDEN)))
}

/// Derive an independent sub-seed, e.g. one per Monte Carlo trial.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(GOLDEN) ^ STREAM_SALT))
}

/// Map a word to the open interval (0, 1), symmetric around 1/2.
#[inline]
fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform draw in (0, 1) at (seed, stream, counter).
#[inline]
pub fn unit_uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    unit_open(word_at(stream_base(seed, stream), counter))
}

/// Two independent standard normals from counters (2 pair, 2 pair + 1) via
/// the Box-Muller transform.
#[inline]
pub fn normal_pair_at(base: u64, pair: u64) -> (f64, f64) {
    let u1 = unit_open(word_at(base, 2 * pair));
    let u2 = unit_open(word_at(base, 2 * pair + 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
    (r * cos, r * sin)
}

/// Standard normal for the `index`-th element of a stream. Pure in
/// (seed, stream, index): recomputing any single element in isolation gives
/// the same value as a bulk pass.
#[inline]
pub fn standard_normal(seed: u64, stream: u64, index: u64) -> f64 {
    let (z0, z1) = normal_pair_at(stream_base(seed, stream), index / 2);
    if index.is_multiple_of(2) {
        z0
    } else {
        z1
    }
}
