//! Seed splitting. Every random consumer gets its own ChaCha stream keyed by
//! `(seed, purpose, index)` so results do not depend on thread scheduling or
//! on how many sibling streams exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream namespaces, one per random consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    EstimatorRun = 1,
    CounterfactualDraw = 2,
    SyntheticMarket = 3,
    RecoveryTrial = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed, a purpose and an index.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose as u64)) ^ index)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose as u64)));
    rng.set_stream(index);
    rng
}
