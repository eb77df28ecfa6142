//! Deterministic randomness helpers.
//!
//! Every stochastic component in this crate draws from a ChaCha8 stream
//! seeded with an explicit `u64`, so a run is reproducible bit-for-bit on
//! any platform. Helpers here derive the primitives we need (uniform
//! doubles, bounded indices, shuffles, normals) directly from the raw
//! 64-bit output to keep the consumed stream identical everywhere.

pub use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

/// Deterministic generator for the given seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `[0, n)`. `n` must be nonzero.
pub fn index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    // Widening multiply maps the 64-bit stream onto [0, n) with bias below
    // n / 2^64, which is immaterial for the sample sizes involved.
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Bernoulli draw with success probability `p`.
pub fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    uniform(rng) < p
}

/// Moves a uniform random `k`-subset of `items` into the first `k` slots.
///
/// Partial Fisher–Yates: positions past `k` hold the remainder in
/// unspecified order.
pub fn partial_shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T], k: usize) {
    let n = items.len();
    let k = k.min(n);
    for i in 0..k {
        let j = i + index(rng, n - i);
        items.swap(i, j);
    }
}

/// Standard normal draw via Box–Muller.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform(rng); // (0, 1] keeps the log finite
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}
