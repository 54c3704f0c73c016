//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream addressed
//! by a 64-bit key and a 64-bit stream id. Keys are derived from a root seed by
//! hashing a path of indices (e.g. `[n_index, trial]`), and the stream id names
//! the row (or trial) inside that key. ChaCha is a counter-mode cipher, so the
//! `k`-th word of a stream is a pure function of `(key, stream, k)`: results do
//! not depend on which thread produced them or in which order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated consumers of the same root seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Ensemble = 0x656e_7365_6d62_6c65,
    Width = 0x7769_6474_6800_0000,
    IndexSet = 0x696e_6465_7873_6574,
    Lipschitz = 0x6c69_7073_6368_6974,
    Subsample = 0x7375_6273_616d_706c,
    PowerIteration = 0x706f_7765_7269_7465,
    Chaining = 0x6368_6169_6e69_6e67,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an index path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xd6e8_feb8_6659_fd93).rotate_left(17) ^ out;
        out = splitmix64(&mut state);
    }
    out
}

/// Opens the stream `stream` under key `(seed, domain)`.
pub fn stream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ (domain as u64);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}
