//! Seed derivation. One master seed fans out to every random decision in
//! a run through labeled, collision-resistant derivation, so components
//! can be reordered or parallelized without perturbing each other's
//! random streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `base` and a label. Distinct labels give
/// independent streams; the same (base, label) pair always gives the
/// same seed.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update([0x1f]);
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// The RNG used everywhere in this crate. Small state, fast, and seedable
/// from a u64 so seeds fit in configs.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
