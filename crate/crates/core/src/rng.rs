//! Counter-based Gaussian draws.
//!
//! A draw is addressed by `(seed, stream, index)`: the ChaCha8 keystream for
//! `seed` is positioned at `stream` and word offset `4 * index`, and exactly
//! two 64-bit words feed one Box–Muller normal. Draws therefore never depend
//! on the order in which they are requested.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const WORDS_PER_NORMAL: u128 = 4;

#[inline]
fn unit_open(bits: u64) -> f64 {
    // 53 random bits mapped to (0, 1].
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> f64 {
    let u1 = unit_open(a);
    let u2 = unit_open(b);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// One standard normal at `(seed, stream, index)`.
pub fn normal_at(seed: u64, stream: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * WORDS_PER_NORMAL);
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

/// Standard normals at indices `start..start + out.len()` of one stream.
pub fn fill_normals(seed: u64, stream: u64, start: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(start as u128 * WORDS_PER_NORMAL);
    for o in out.iter_mut() {
        let a = rng.next_u64();
        let b = rng.next_u64();
        *o = box_muller(a, b);
    }
}

/// Mix a base seed with a sub-index (replica, component, ...) into a new seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over the combined value.
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential generator for non-addressed sampling (initial conditions,
/// test pairs).
pub fn sequential(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
