//! Seeded randomness.
//!
//! All random draws use ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `seed_from_u64`. Independent work items never share a generator: each one
//! derives its own seed from the master seed and a path of integers (stream
//! tag, index, ...) via SplitMix64 mixing, so results do not depend on how
//! work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream tags keep unrelated consumers of one master seed apart.
pub mod stream {
    pub const SUBSETS: u64 = 1;
    pub const REPLICATES: u64 = 2;
    pub const AVERAGING: u64 = 3;
    pub const TARGET: u64 = 4;
    pub const SWEEP: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &part| {
        splitmix64(acc ^ splitmix64(part))
    })
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, path: &[u64]) -> SeededRng {
    rng_from_seed(derive_seed(master, path))
}

/// Uniform `k`-subset of `0..population`, returned sorted.
///
/// Selection sampling: item `i` is kept with probability
/// `(k - kept) / (population - i)`, which makes every `k`-subset equally
/// likely and consumes exactly `population` draws.
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, k: usize, population: usize) -> Vec<usize> {
    assert!(k <= population, "cannot draw {k} of {population}");
    let mut out = Vec::with_capacity(k);
    for i in 0..population {
        if out.len() == k {
            break;
        }
        if rng.random_range(0..population - i) < k - out.len() {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_path() {
        let a = derive_seed(7, &[1, 0]);
        let b = derive_seed(7, &[1, 1]);
        let c = derive_seed(7, &[0, 1]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, &[1, 0]));
    }

    #[test]
    fn sample_indices_is_sorted_and_sized() {
        let mut rng = rng_from_seed(3);
        for k in [0, 1, 5, 20] {
            let s = sample_indices(&mut rng, k, 20);
            assert_eq!(s.len(), k);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&v| v < 20));
        }
    }

    #[test]
    fn sample_indices_is_roughly_uniform() {
        let mut rng = rng_from_seed(11);
        let mut hits = [0u32; 10];
        for _ in 0..20_000 {
            for v in sample_indices(&mut rng, 3, 10) {
                hits[v] += 1;
            }
        }
        // each vertex expected 6000 times
        for h in hits {
            assert!((5700..6300).contains(&h), "{hits:?}");
        }
    }
}
