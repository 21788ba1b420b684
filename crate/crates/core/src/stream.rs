//! Deterministic keyed random streams.
//!
//! Every random decision in the crate draws from a ChaCha8 stream whose key is
//! derived from `(seed, domain, a, b)` by a SplitMix64 chain. Streams for
//! different nodes or iterations are independent, so work can be scheduled
//! across any number of workers without changing a single drawn value.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separators; distinct usages never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Embedding initialization, keyed by node.
    Init = 1,
    /// Per-iteration embedding perturbation, keyed by (iteration, node).
    Perturb = 2,
    /// Per-iteration negative-node selection, keyed by (iteration, node).
    Negative = 3,
    /// Edge held-out split sampling.
    Split = 4,
    /// Evaluation query sampling.
    EvalSample = 5,
    /// Negative-pair sampling for binary link ranking.
    EvalPairs = 6,
    /// Per-user history pick for hit-rate.
    EvalHitRate = 7,
}

fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    *state = z ^ (z >> 31);
}

/// ChaCha8 stream keyed by `(seed, domain, a, b)`.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut h = seed;
    splitmix64(&mut h);
    h ^= domain as u64;
    splitmix64(&mut h);
    h ^= a;
    splitmix64(&mut h);
    h ^= b;
    splitmix64(&mut h);

    let mut key = [0u8; 32];
    let mut word = h;
    for chunk in key.chunks_exact_mut(8) {
        splitmix64(&mut word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream keyed only by `(seed, domain)`.
pub fn scoped(seed: u64, domain: Domain) -> ChaCha8Rng {
    stream(seed, domain, 0, 0)
}
