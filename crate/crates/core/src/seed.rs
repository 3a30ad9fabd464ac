//! Deterministic seed derivation. Every random stream in a run is derived
//! from the master seed plus a path of integer labels, so results do not
//! depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `master` together with `path` into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn rng_from(master: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, path))
}

/// Stream labels used across the pipeline.
pub(crate) mod label {
    pub const FIT: u64 = 1;
    pub const NROY: u64 = 2;
    pub const DESIGN: u64 = 3;
    pub const FUNCTION: u64 = 4;
    pub const SECOND_MAX: u64 = 5;
    pub const REPLICATION: u64 = 6;
}
