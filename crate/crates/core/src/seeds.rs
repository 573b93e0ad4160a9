//! Deterministic seed splitting.
//!
//! A child seed is `splitmix64(master ⊕ splitmix64(index) ⊕ fnv1a(tag))`, so
//! each `(seed index, tag)` pair owns an independent stream and adding a
//! new tag never perturbs existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

pub fn child_seed(master: u64, index: u64, tag: &str) -> u64 {
    splitmix64(master ^ splitmix64(index) ^ fnv1a(tag))
}

pub fn child_rng(master: u64, index: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, index, tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn children_are_distinct_and_stable() {
        let mut seen = HashSet::new();
        for idx in 0..100 {
            for tag in ["channels", "ues", "angles", "scheme:continuous"] {
                assert!(seen.insert(child_seed(7, idx, tag)));
            }
        }
        assert_eq!(child_seed(7, 3, "ues"), child_seed(7, 3, "ues"));
        assert_ne!(child_seed(7, 3, "ues"), child_seed(8, 3, "ues"));
    }
}
