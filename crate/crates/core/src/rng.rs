//! Seeded, counter-based random streams.
//!
//! Every randomized computation is addressed by `(seed, stream)` and, inside
//! that, by a substream index (replicate number, center number, ...). The
//! generator is ChaCha8: the key is derived from `(seed, stream)` with
//! SplitMix64 and the substream index selects the ChaCha stream, so the draw
//! sequence for a given address does not depend on how work is scheduled
//! across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Generator for substream `index` of this spec.
    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        let mut seed_state = self.seed;
        let mut stream_state = self.stream ^ 0xD1B5_4A32_D192_ED03;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            let word = splitmix64(&mut seed_state) ^ splitmix64(&mut stream_state).rotate_left(17);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform integer in `0..n` (Lemire's multiply-and-reject).
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "below(0)");
    let n = n as u64;
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = (rng.next_u64() as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as usize;
        }
    }
}

/// Uniform double in `[0, 1)` with 53 random bits.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T, R: RngCore + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

/// Partial Fisher–Yates: after the call `items[..k]` is a uniform random
/// `k`-subset in uniform random order.
pub fn shuffle_take<T, R: RngCore + ?Sized>(items: &mut [T], k: usize, rng: &mut R) {
    let n = items.len();
    assert!(k <= n);
    for i in 0..k.min(n.saturating_sub(1)) {
        let j = i + below(rng, n - i);
        items.swap(i, j);
    }
}
