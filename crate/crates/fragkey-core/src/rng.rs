//! Seeded randomness with fixed, documented substreams.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`), chosen because its
//! output is specified independently of this crate's dependencies: the same
//! seed yields the same bytes on every platform and every future version.
//! Distribution helpers (uniform floats, index sampling, shuffling, Gaussian
//! draws) are implemented here directly on top of the raw `u64` stream rather
//! than delegated to distribution crates, so serialized transcripts stay
//! byte-stable across dependency upgrades.
//!
//! Substreams: one master seed drives the whole session; each consumer gets an
//! independent stream via ChaCha's stream counter (`set_stream`), so adding
//! draws in one domain never perturbs another.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id for speckle-set generation.
pub const DOMAIN_SPECKLES: u64 = 1;
/// Stream id for the fragment split.
pub const DOMAIN_SPLIT: u64 = 2;
/// Stream id for attack randomness (applied to an attack's own seed).
pub const DOMAIN_ATTACK: u64 = 3;
/// Base stream id for per-user symbol libraries (user j uses base + j).
pub const DOMAIN_LIBRARY_BASE: u64 = 0x100;
/// Base stream id for per-user detector noise (user j uses base + j).
pub const DOMAIN_NOISE_BASE: u64 = 0x200;

/// Deterministic random stream from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `domain` of the stream seeded by `seed`.
pub fn domain_rng(seed: u64, domain: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(domain);
    rng
}

/// Mixes several integers into one seed (splitmix64 finalizer over a running
/// combination). Used to derive per-trial seeds in experiment sweeps.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        acc = splitmix64(acc ^ p.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    splitmix64(acc)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` using the top 53 bits of one `u64`.
pub fn next_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unbiased uniform index in `0..n` by rejection sampling.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    assert!(n > 0, "uniform_index needs a non-empty range");
    let n64 = n as u64;
    // Largest multiple of n that fits in u64; values beyond it would bias the
    // modulo, so they are rejected (at most one expected retry for any n).
    let zone = (u64::MAX / n64) * n64;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n64) as usize;
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut impl RngCore, slice: &mut [T]) {
    for i in (1..slice.len()).rev() {
        let j = uniform_index(rng, i + 1);
        slice.swap(i, j);
    }
}

/// `k` distinct indices from `0..n`, by partial Fisher-Yates; the returned
/// order is the selection order (deterministic under the rng).
pub fn choose_distinct(rng: &mut impl RngCore, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot choose {k} distinct from {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_index(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Standard normal draw via Box-Muller (two uniforms per draw; the second
/// branch value is discarded to keep the helper stateless).
pub fn gaussian(rng: &mut impl RngCore) -> f64 {
    // 1 - u keeps the argument of ln strictly positive.
    let u1 = 1.0 - next_f64(rng);
    let u2 = next_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
