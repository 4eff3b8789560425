//! Seeded randomness.
//!
//! Every run owns a xoshiro256++ stream (period 2^256 - 1). Replicate and
//! process streams are keyed by `derive_replicate_seed(master, index)` so
//! results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type CgaRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer (Stafford variant 13). A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix64(master ^ mix64(index * GOLDEN_GAMMA + GOLDEN_GAMMA))`.
///
/// For a fixed master seed the map `index -> seed` is a composition of
/// bijections, so distinct indices never collide.
pub fn derive_replicate_seed(master_seed: u64, replicate_index: u64) -> u64 {
    let keyed = mix64(
        replicate_index
            .wrapping_mul(GOLDEN_GAMMA)
            .wrapping_add(GOLDEN_GAMMA),
    );
    mix64(master_seed ^ keyed)
}

pub fn rng_from_seed(seed: u64) -> CgaRng {
    CgaRng::seed_from_u64(seed)
}
