use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded bit interleaver: `out[i] = in[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    seed: u64,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm, seed }
    }

    /// Interleaver of user `user` in a run seeded with `run_seed`.
    pub fn for_user(len: usize, user: usize, run_seed: u64) -> Self {
        Self::new(len, run_seed ^ user as u64)
    }

    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<V: Copy>(&self, x: &[V]) -> Result<Vec<V>> {
        self.check(x.len())?;
        Ok(self.perm.iter().map(|&p| x[p]).collect())
    }

    pub fn deinterleave<V: Copy + Default>(&self, x: &[V]) -> Result<Vec<V>> {
        self.check(x.len())?;
        let mut out = vec![V::default(); x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        Ok(out)
    }

    fn check(&self, got: usize) -> Result<()> {
        if got != self.perm.len() {
            return Err(Error::LengthMismatch {
                expected: self.perm.len(),
                got,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_identity() {
        let x: Vec<u32> = (0..100).collect();
        let il = Interleaver::new(100, 42);
        assert_ne!(il.interleave(&x).unwrap(), x);
        assert_eq!(il.deinterleave(&il.interleave(&x).unwrap()).unwrap(), x);
        assert_eq!(Interleaver::identity(100).interleave(&x).unwrap(), x);
        assert!(il.interleave(&x[..5]).is_err());
    }
}
