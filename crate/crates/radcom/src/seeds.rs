//! Deterministic seed derivation.
//!
//! Every random draw in the simulator is keyed by an explicit 64-bit seed
//! plus a stream label and integer coordinates (link ids, node ids, trial
//! indices). Derived streams are independent of worker scheduling, so
//! parallel runs reproduce serial runs bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for cheap key mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_str(seed: u64, label: &str) -> u64 {
    let mut z = splitmix64(seed);
    for b in label.as_bytes() {
        z = splitmix64(z ^ u64::from(*b));
    }
    z
}

/// Derives a child seed from a base seed, a stream label, and integer
/// coordinates. The same inputs always yield the same child seed.
pub fn derive_seed(base: u64, label: &str, coords: &[u64]) -> u64 {
    let mut z = mix_str(base, label);
    for c in coords {
        z = splitmix64(z ^ *c);
    }
    z
}

/// A counter-based RNG for the derived stream.
pub fn derived_rng(base: u64, label: &str, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, coords))
}
