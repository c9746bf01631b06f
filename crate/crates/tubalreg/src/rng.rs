//! Deterministic substream derivation for reproducible experiments.
//!
//! Every random quantity is drawn from a counter-based ChaCha stream keyed by
//! `(base seed, purpose string, index)`, so replication `i` of purpose
//! `"noise"` draws the same bits no matter which thread runs it or how other
//! purposes consume their streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Collapse `(seed, purpose)` into a derived 64-bit seed.
pub fn derive(seed: u64, purpose: &str) -> u64 {
    let mut state = seed ^ fnv1a(purpose.as_bytes());
    splitmix64(&mut state)
}

/// Substream generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: &str, index: u64) -> ChaCha12Rng {
    let mut state = seed ^ fnv1a(purpose.as_bytes()) ^ index.wrapping_mul(0xd1342543de82ef95);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
