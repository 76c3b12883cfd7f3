//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a 64-bit seed
//! derived from one root seed plus a stream tag and integer coordinates. The
//! derivation is a SplitMix64 cascade, so a stream depends only on its own
//! coordinates and never on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the pipeline stages.
pub mod stream {
    pub const LMC: u64 = 0x4c4d_4300;
    pub const HOLDOUTS: u64 = 0x484f_4c44;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const SYNTH_COEFFS: u64 = 0x5359_4e43;
    pub const SYNTH_NOISE: u64 = 0x5359_4e4e;
    pub const MISSINGNESS: u64 = 0x4d49_5353;
    pub const COLLATE: u64 = 0x434f_4c4c;
    pub const CV: u64 = 0x4356_0000;
    pub const FAIR_RACE: u64 = 0x4641_4952;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root`, a stream tag and any number of coordinates.
pub fn derive(root: u64, tag: u64, coords: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ splitmix64(tag));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(root: u64, tag: u64, coords: &[u64]) -> ChaCha8Rng {
    rng(derive(root, tag, coords))
}
