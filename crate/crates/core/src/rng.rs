//! Counter-style RNG streams: every `(seed, key...)` tuple names an
//! independent ChaCha8 stream, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

// Stage tags for sub-seeds derived from one user seed.
pub const TAG_SIM_EMBEDDING: u64 = 0x51_4d_45;
pub const TAG_SIM_PAIRS: u64 = 0x51_4d_50;
pub const TAG_NEGATIVES: u64 = 0x4e_45_47;
pub const TAG_GIBBS: u64 = 0x47_49_42;
pub const TAG_LAPLACE: u64 = 0x4c_41_50;
pub const TAG_INIT: u64 = 0x49_4e_49;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed and a key path into one 64-bit value.
pub fn derive_seed(seed: u64, key: &[u64]) -> u64 {
    key.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k).rotate_left(17)))
}

pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    let mut s = derive_seed(seed, key);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
