//! Seed derivation: every random quantity descends from one master seed through
//! named sub-streams, so components can be reproduced independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::GroupElement;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `label` of `master`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the master seed.
    let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    });
    mix64(master ^ mix64(h))
}

/// Seed of the `index`-th member of a family of streams (e.g. the i-th Monte Carlo run).
pub fn indexed_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index)
}

/// Counter-style seed for one lattice site.
pub fn site_seed(master: u64, site: &GroupElement) -> u64 {
    site.coords().iter().fold(mix64(master), |h, &c| mix64(h ^ c as u64))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
