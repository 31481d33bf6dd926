//! Deterministic random substreams.
//!
//! Every sweep cell draws from its own ChaCha stream keyed by
//! `(seed, tag, index)`, so results never depend on scheduling order or on
//! the number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// 64-bit FNV-1a hash. Stable across platforms and compiler versions.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent stream for `(seed, tag, index)`.
pub fn substream(seed: u64, tag: &str, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed ^ fnv1a(tag.as_bytes()));
    rng.set_stream(index);
    rng
}

/// Standard real Gaussian sample.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Circularly-symmetric complex Gaussian with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    Complex64::new(s * normal(rng), s * normal(rng))
}
