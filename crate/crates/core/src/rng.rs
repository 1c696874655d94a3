//! Counter-based seed derivation.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a pure
//! function of `(root, tags...)`, so agents and iterations can be evaluated in
//! any order (or in parallel) without changing the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a list of tags into a new 64-bit seed.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(root), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn substream(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tags))
}

/// Tags separating the independent random consumers of a run.
pub mod tag {
    pub const GRAPH: u64 = 0x6772_6170;
    pub const COST: u64 = 0x636f_7374;
    pub const INIT: u64 = 0x696e_6974;
    pub const ALGO: u64 = 0x616c_676f;
    pub const CHANNEL_QX: u64 = 1;
    pub const CHANNEL_QY: u64 = 2;
    pub const CHANNEL_QHX: u64 = 3;
    pub const CHANNEL_QHY: u64 = 4;
}
