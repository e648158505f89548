//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows through a ChaCha stream whose seed
//! is derived from a root seed plus a domain tag and an index. Derivation
//! is a pure function, so results never depend on thread scheduling: a
//! parallel loop over rows or replicates derives each stream independently.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep independent uses of the same root seed from colliding.
pub mod domain {
    pub const KNOCKOFF_ROW: u64 = 0x6b6e6f636b; // per-row knockoff sampling
    pub const FIXED_X_BASIS: u64 = 0x6261736973; // complement basis draw
    pub const CV_FOLDS: u64 = 0x666f6c6473; // fold permutation
    pub const STUDY: u64 = 0x7374756479; // per-study pipeline streams
    pub const REPLICATE: u64 = 0x7265706c; // Monte-Carlo replicates
    pub const TRUTH: u64 = 0x74727574; // coefficient draw
    pub const DATA: u64 = 0x64617461; // design/response draw
    pub const METHOD: u64 = 0x6d657468; // per-method analysis streams
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, tag, index)`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index)
}

/// A seeded generator for one derived stream.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derive_is_pure_and_tag_sensitive() {
        assert_eq!(derive(1, domain::STUDY, 0), derive(1, domain::STUDY, 0));
        assert_ne!(derive(1, domain::STUDY, 0), derive(1, domain::STUDY, 1));
        assert_ne!(derive(1, domain::STUDY, 0), derive(1, domain::TRUTH, 0));
        assert_ne!(derive(1, domain::STUDY, 0), derive(2, domain::STUDY, 0));
    }

    #[test]
    fn streams_reproduce() {
        let mut a = stream(7, domain::KNOCKOFF_ROW, 3);
        let mut b = stream(7, domain::KNOCKOFF_ROW, 3);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
