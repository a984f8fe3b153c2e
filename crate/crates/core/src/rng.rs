//! Seed derivation.
//!
//! All randomness flows from a master seed. A sub-stream seed is
//! `splitmix64(master ^ splitmix64(stream))`, so streams are independent of the
//! order in which they are consumed and per-sample seeds can be pre-derived.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

// Stream tags used across the crate. Changing any of these changes every artifact.
pub const STREAM_SHAPES: u64 = 0x5348_4150;
pub const STREAM_FREEHAND: u64 = 0x4652_4545;
pub const STREAM_SPLIT: u64 = 0x5350_4c54;
pub const STREAM_SHUFFLE: u64 = 0x5348_5546;
pub const STREAM_INIT: u64 = 0x494e_4954;
pub const STREAM_DROPOUT: u64 = 0x4452_4f50;
pub const STREAM_LATENT: u64 = 0x4c41_5445;
pub const STREAM_BATCH: u64 = 0x4241_5443;
pub const STREAM_FACADE: u64 = 0x4641_4341;
pub const STREAM_SUBSET: u64 = 0x5355_4253;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream: u64) -> Rng {
    rng_from_seed(derive_seed(master, stream))
}
