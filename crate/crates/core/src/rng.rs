//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream. A stream is
//! addressed by `(seed, label, index)`:
//!
//! * the 256-bit ChaCha key is four consecutive SplitMix64 outputs, little
//!   endian, started from `seed ^ fnv1a64(label)`;
//! * the ChaCha stream id is `index` (for schedules, the sample id).
//!
//! Unit reals take the top 53 bits of one `u64`; bounded integers use a
//! single `u64` reduced modulo the span. Both rules are fixed so that
//! schedules and corpora are reproducible by any implementation that follows
//! them.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Opens the named substream `index` under `seed`.
pub fn substream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut state = seed ^ fnv1a64(label);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform real in `[0, 1)` with 53 bits of resolution.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in the inclusive range `[lo, hi]`. Requires `lo <= hi`.
pub fn inclusive_range<R: RngCore + ?Sized>(rng: &mut R, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = hi - lo;
    if span == u64::MAX {
        return rng.next_u64();
    }
    lo + rng.next_u64() % (span + 1)
}

/// Standard normal draw (Box–Muller, one value per call).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
