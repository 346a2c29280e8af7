//! Seed derivation and stream construction.
//!
//! Every random consumer draws from a ChaCha8 stream keyed by a derived
//! seed, so results depend only on `(seed, stream)` and never on thread
//! counts or scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent child seed for a labelled purpose.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(tag.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on the open interval `(0, 1)` with 52-bit resolution; both
/// endpoints are unreachable.
#[inline]
pub fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Unit-mean exponential by inversion, `-ln(1 - u)`.
#[inline]
pub fn unit_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -libm::log1p(-open_uniform(rng))
}
