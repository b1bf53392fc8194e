//! Seeded random permutations between coded bits and modulated bits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};
use crate::params::Group;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    /// Output position `i` takes input element `perm[i]`.
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut inverse = vec![0; len];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Interleaver { perm, inverse }
    }

    /// Interleaver of one user, derived from the global seed.
    pub fn for_user(len: usize, global_seed: u64, group: Group, user: usize) -> Self {
        Self::new(len, user_seed(global_seed, group, user))
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), seq.len())?;
        Ok(self.perm.iter().map(|&p| seq[p]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), seq.len())?;
        Ok(self.inverse.iter().map(|&i| seq[i]).collect())
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn user_seed(global_seed: u64, group: Group, user: usize) -> u64 {
    let tag = match group {
        Group::Stationary => 0x5354_0000u64,
        Group::Mobile => 0x4D42_0000u64,
    };
    mix_seed(mix_seed(global_seed) ^ tag ^ user as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_one_is_identity() {
        let il = Interleaver::new(1, 3);
        assert_eq!(il.interleave(&[7]).unwrap(), vec![7]);
    }

    #[test]
    fn users_get_different_permutations() {
        let a = Interleaver::for_user(2048, 1, Group::Stationary, 0);
        let b = Interleaver::for_user(2048, 1, Group::Stationary, 1);
        let c = Interleaver::for_user(2048, 1, Group::Mobile, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
