//! Deterministic random substreams.
//!
//! Every replicate draws from its own stream, keyed by a hash of the base
//! seed, a cell label and the replicate index, so results do not depend on
//! scheduling or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout.
pub type StreamRng = ChaCha8Rng;

/// Stream for `(base_seed, cell, index, attempt)`.
pub fn substream(base_seed: u64, cell: &str, index: u64, attempt: u32) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    hasher.update((cell.len() as u64).to_le_bytes());
    hasher.update(cell.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update(attempt.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    StreamRng::from_seed(digest)
}

/// A 64-bit seed derived the same way, for handing to nested procedures.
pub fn derive_seed(base_seed: u64, cell: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"seed");
    hasher.update(base_seed.to_le_bytes());
    hasher.update(cell.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
