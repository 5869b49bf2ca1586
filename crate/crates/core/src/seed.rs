//! Seed fan-out.
//!
//! Every random choice in the harness descends from one 64-bit root seed.
//! A child seed is derived from `(parent, label, index)` by a SplitMix64
//! chain: the parent is mixed once, then each byte of the label is xor-ed in
//! and mixed, then the index is xor-ed in and mixed. Derivation depends only
//! on its arguments, so work may be split across threads in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed.
pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix(parent);
    for b in label.bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    splitmix(h ^ index)
}

/// Seed handed to the systems of one experiment on the test case `case_id`.
pub fn for_case(parent: u64, case_id: &str) -> u64 {
    derive(parent, case_id, 0)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_a_pure_function() {
        assert_eq!(derive(7, "audit", 3), derive(7, "audit", 3));
        assert_ne!(derive(7, "audit", 3), derive(7, "audit", 4));
        assert_ne!(derive(7, "audit", 3), derive(7, "audits", 3));
        assert_ne!(derive(7, "audit", 3), derive(8, "audit", 3));
    }

    #[test]
    fn empty_label_still_mixes_index() {
        assert_ne!(derive(0, "", 0), derive(0, "", 1));
    }
}
