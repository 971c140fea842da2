//! Deterministic random-number substreams.
//!
//! Every Monte Carlo routine partitions its budget into fixed-size chunks and
//! draws chunk `i` from `substream(seed, i)`. Chunk results are reduced in
//! chunk-index order, so estimates are bit-identical for a given
//! `(seed, budget)` regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples drawn per substream chunk.
pub const CHUNK: u64 = 1 << 16;

/// SplitMix64 step; used to expand (seed, stream) into key material.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic, platform-independent RNG for stream `stream` of seed `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09_e667_f3bc_c908;
    let a = splitmix64(&mut state);
    state ^= stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xbb67_ae85_84ca_a73b;
    let b = splitmix64(&mut state);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derive an independent child seed for a salted sub-task (curve points,
/// repeated estimates) so substream indices never collide across tasks.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut state = seed ^ salt.wrapping_mul(0x2545_f491_4f6c_dd1d);
    let a = splitmix64(&mut state);
    splitmix64(&mut state) ^ a.rotate_left(17)
}

/// Number of chunks needed to cover `budget` samples.
pub fn chunk_count(budget: u64) -> u64 {
    budget.div_ceil(CHUNK)
}

/// Size of chunk `i` when covering `budget` samples.
pub fn chunk_len(budget: u64, chunk: u64) -> u64 {
    let start = chunk * CHUNK;
    CHUNK.min(budget.saturating_sub(start))
}
