//! Small-width block ciphers: an ideal (random-permutation) cipher and the
//! Even-Mansour construction over a public permutation.
//!
//! Tables are drawn with ChaCha8 seeded from a `u64` and shuffled with
//! `rand`'s Fisher-Yates, so a seed pins the table bit-for-bit.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2n::{MAX_WIDTH, MIN_WIDTH};

/// Anything that maps n-bit blocks to n-bit blocks in the forward direction.
pub trait BlockCipher {
    fn width(&self) -> u32;
    fn encrypt(&self, x: u32) -> u32;
}

/// A bijection on `{0,1}^n` stored as forward and inverse tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    width: u32,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(width: u32) -> Self {
        let forward: Vec<u32> = (0..1u32 << width).collect();
        Self { width, inverse: forward.clone(), forward }
    }

    /// Uniform permutation of `0..2^width` determined by `seed`.
    pub fn random(seed: u64, width: u32) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::WidthOutOfRange(width));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forward: Vec<u32> = (0..1u32 << width).collect();
        forward.shuffle(&mut rng);
        Ok(Self::from_forward_unchecked(width, forward))
    }

    /// Wraps an explicit table, checking that it is a bijection.
    pub fn from_table(width: u32, forward: Vec<u32>) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH || forward.len() != 1 << width {
            return Err(Error::NotAPermutation(width));
        }
        let mut seen = vec![false; forward.len()];
        for &y in &forward {
            let slot = seen.get_mut(y as usize).ok_or(Error::NotAPermutation(width))?;
            if std::mem::replace(slot, true) {
                return Err(Error::NotAPermutation(width));
            }
        }
        Ok(Self::from_forward_unchecked(width, forward))
    }

    fn from_forward_unchecked(width: u32, forward: Vec<u32>) -> Self {
        let mut inverse = vec![0u32; forward.len()];
        for (x, &y) in forward.iter().enumerate() {
            inverse[y as usize] = x as u32;
        }
        Self { width, forward, inverse }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        self.forward[x as usize]
    }

    #[inline]
    pub fn invert(&self, y: u32) -> u32 {
        self.inverse[y as usize]
    }

    pub fn checked_apply(&self, x: u32) -> Result<u32> {
        self.forward
            .get(x as usize)
            .copied()
            .ok_or(Error::ValueOutOfRange { value: x, width: self.width })
    }

    pub fn checked_invert(&self, y: u32) -> Result<u32> {
        self.inverse
            .get(y as usize)
            .copied()
            .ok_or(Error::ValueOutOfRange { value: y, width: self.width })
    }

    pub fn forward_table(&self) -> &[u32] {
        &self.forward
    }
}

/// Ideal cipher: the key selects a random permutation.
#[derive(Clone, Debug)]
pub struct KeyedCipher {
    key: u64,
    perm: Permutation,
}

impl KeyedCipher {
    pub fn new(key: u64, width: u32) -> Result<Self> {
        Ok(Self { key, perm: Permutation::random(key, width)? })
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn decrypt(&self, y: u32) -> u32 {
        self.perm.invert(y)
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }
}

impl BlockCipher for KeyedCipher {
    fn width(&self) -> u32 {
        self.perm.width()
    }

    #[inline]
    fn encrypt(&self, x: u32) -> u32 {
        self.perm.apply(x)
    }
}

/// `x -> k2 ^ P(x ^ k1)` for a public permutation `P`.
#[derive(Clone, Debug)]
pub struct EvenMansourCipher {
    k1: u32,
    k2: u32,
    perm: Arc<Permutation>,
}

impl EvenMansourCipher {
    pub fn new(k1: u32, k2: u32, perm: Arc<Permutation>) -> Result<Self> {
        let mask = (1u64 << perm.width()) - 1;
        for k in [k1, k2] {
            if k as u64 > mask {
                return Err(Error::ValueOutOfRange { value: k, width: perm.width() });
            }
        }
        Ok(Self { k1, k2, perm })
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    pub fn permutation(&self) -> &Arc<Permutation> {
        &self.perm
    }

    pub fn decrypt(&self, y: u32) -> u32 {
        self.perm.invert(y ^ self.k2) ^ self.k1
    }
}

impl BlockCipher for EvenMansourCipher {
    fn width(&self) -> u32 {
        self.perm.width()
    }

    #[inline]
    fn encrypt(&self, x: u32) -> u32 {
        self.k2 ^ self.perm.apply(x ^ self.k1)
    }
}
