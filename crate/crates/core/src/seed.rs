//! Deterministic seed derivation.
//!
//! Every random stream in the pipeline is keyed off one 64-bit seed. Child
//! seeds are derived by mixing the parent with a tag through the SplitMix64
//! finaliser, so streams for different roles, passes or samples never collide
//! by construction of the inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn derive2(seed: u64, a: u64, b: u64) -> u64 {
    derive(derive(seed, a), b)
}

pub fn rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Role tags for the runner's top-level streams.
pub mod tag {
    pub const SPLIT: u64 = 0x0053_504c_4954;
    pub const VALIDATION: u64 = 0x0056_414c;
    pub const INFERENCE: u64 = 0x0049_4e46_4552;
    pub const VALIDATION_INFERENCE: u64 = 0x5641_4c49_4e46;
}
