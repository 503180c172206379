//! Deterministic random substreams.
//!
//! Every random draw in the pipeline comes from a ChaCha8 generator whose seed
//! is derived from a master seed and a short list of integer coordinates
//! (stream purpose, view index, frame index, ...). The derivation is a chain
//! of SplitMix64 finalizers:
//!
//! ```text
//! h0 = mix(master)
//! hk = mix(h(k-1) ^ mix(coord_k + k * GOLDEN))
//! ```
//!
//! so that any (view, frame) pair can be generated in isolation and in any
//! order with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed from a master seed and a coordinate path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(mix(master), |h, (k, &c)| {
        mix(h ^ mix(c.wrapping_add((k as u64 + 1).wrapping_mul(GOLDEN))))
    })
}

/// Generator for the substream at `path` under `master`.
pub fn substream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Stream purpose tags, used as the first path coordinate.
pub mod purpose {
    pub const TURBULENCE: u64 = 1;
    pub const CONTRAST: u64 = 2;
    pub const PRESET: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const CLIP: u64 = 5;
}
