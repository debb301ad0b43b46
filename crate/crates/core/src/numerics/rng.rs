//! Seeded randomness. Every stream is a ChaCha8 generator keyed by a master
//! seed and a list of stream ids, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with stream ids into an independent child seed.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(splitmix64(master), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}

pub fn rng_for(master: u64, stream: &[u64]) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(master, stream))
}

/// Inverted-dropout mask: each entry is `0` with probability `p`, otherwise
/// `1 / (1 - p)`.
pub fn dropout_mask<R: Rng + ?Sized>(rng: &mut R, len: usize, p: f64) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&p));
    if p == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

/// Fisher-Yates shuffle of `0..n`.
pub fn permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
