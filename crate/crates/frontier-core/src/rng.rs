//! Deterministic stream derivation.
//!
//! Every random quantity in the engine (forecast noise, network
//! initialization, episode starts) is drawn from a stream derived from the
//! master seed and a list of context tags. Streams for distinct contexts are
//! independent of evaluation order, so parallel sweeps reproduce the output
//! of sequential runs bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; decorrelates consecutive tag values.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn derive(master_seed: u64, tags: &[u64]) -> u64 {
    let mut state = mix(master_seed);
    for &tag in tags {
        state = mix(state ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93));
    }
    state
}

/// Derives a child seed from the master seed and context tags.
pub fn derive_seed(master_seed: u64, tags: &[u64]) -> u64 {
    derive(master_seed, tags)
}

/// Derives a reproducible generator from the master seed and context tags.
pub fn stream(master_seed: u64, tags: &[u64]) -> ChaCha12Rng {
    let mut state = derive(master_seed, tags);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        state = mix(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
