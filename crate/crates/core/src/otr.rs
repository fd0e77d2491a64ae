//! The OTR two-round Feistel mode (empty associated data, full blocks only)
//! and its Prost-OTR-Even-Mansour variant.
//!
//! Plaintext is processed in pairs. Pair `i` uses the masks `2^(i+1)·B` and
//! `(2^(i+1)+1)·B`, where `B` is the mask base (`delta` for OTR, `L` for the
//! Even-Mansour variant):
//!
//! ```text
//! C[2i-1] = E(2^(i+1)B ^ M[2i-1]) ^ M[2i]
//! C[2i]   = E((2^(i+1)+1)B ^ C[2i-1]) ^ M[2i-1]
//! ```
//!
//! An odd trailing block is `C[d] = E(2^(ceil(d/2)+1)B) ^ M[d]`. When `d` is
//! even the last pair is mirrored: the roles of positions `d-1` and `d` swap
//! in the round inputs. Only the forward direction of `E` is ever used.

use crate::cipher::{BlockCipher, EvenMansourCipher, KeyedCipher};
use crate::error::{Error, Result};
use crate::gf2n::{FieldElement, FieldSpec};

/// A message or ciphertext of `d >= 2` full n-bit blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Blocks {
    items: Vec<u32>,
}

impl Blocks {
    pub fn new(items: Vec<u32>, width: u32) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::TooFewBlocks(items.len()));
        }
        let mask = (1u64 << width) - 1;
        if let Some(&bad) = items.iter().find(|&&b| b as u64 > mask) {
            return Err(Error::ValueOutOfRange { value: bad, width });
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.items
    }

    /// 1-based access, matching the usual `C[1]..C[d]` numbering.
    pub fn at(&self, pos: usize) -> u32 {
        self.items[pos - 1]
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.items
    }
}

/// Ciphertext blocks together with their authentication tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaggedCiphertext {
    pub blocks: Blocks,
    pub tag: u32,
}

/// Masks `(2^(i+1)·base, (2^(i+1)+1)·base)` for pairs `i = 1..=pairs`, each
/// pair obtained from the previous one by doubling.
pub fn mask_schedule(base: FieldElement, pairs: usize) -> Vec<(FieldElement, FieldElement)> {
    let mut even = base.double().double();
    let mut out = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        out.push((even, even + base));
        even = even.double();
    }
    out
}

/// XOR of the even-position blocks, plus the trailing block when `d` is odd.
pub fn checksum(m: &[u32]) -> u32 {
    let mut sigma = m.iter().skip(1).step_by(2).fold(0, |acc, &b| acc ^ b);
    if m.len() % 2 == 1 {
        sigma ^= m[m.len() - 1];
    }
    sigma
}

/// Tag-input coefficient for a `d`-block message: 16 for `d = 2`, 26 for
/// `d = 4`, and `3·(2^(ceil(d/2)+1) + 1) + 1` (carry-less) otherwise.
pub fn tag_coefficient(spec: FieldSpec, d: usize) -> FieldElement {
    match d {
        2 => spec.constant(16),
        4 => spec.constant(26),
        _ => {
            let k = d.div_ceil(2) as u32 + 1;
            spec.constant(3) * (spec.pow2(k) + spec.one()) + spec.one()
        }
    }
}

fn feistel_encrypt<C: BlockCipher>(cipher: &C, base: FieldElement, m: &[u32]) -> Vec<u32> {
    let d = m.len();
    let full_pairs = d / 2;
    let masks = mask_schedule(base, full_pairs + 1);
    let mut c = vec![0u32; d];
    for (i, &(lo, hi)) in masks.iter().take(full_pairs).enumerate() {
        let (a, b) = (2 * i, 2 * i + 1);
        if d % 2 == 0 && i + 1 == full_pairs {
            c[b] = cipher.encrypt(lo.value() ^ m[a]) ^ m[b];
            c[a] = cipher.encrypt(hi.value() ^ c[b]) ^ m[a];
        } else {
            c[a] = cipher.encrypt(lo.value() ^ m[a]) ^ m[b];
            c[b] = cipher.encrypt(hi.value() ^ c[a]) ^ m[a];
        }
    }
    if d % 2 == 1 {
        c[d - 1] = cipher.encrypt(masks[full_pairs].0.value()) ^ m[d - 1];
    }
    c
}

fn feistel_decrypt<C: BlockCipher>(cipher: &C, base: FieldElement, c: &[u32]) -> Vec<u32> {
    let d = c.len();
    let full_pairs = d / 2;
    let masks = mask_schedule(base, full_pairs + 1);
    let mut m = vec![0u32; d];
    for (i, &(lo, hi)) in masks.iter().take(full_pairs).enumerate() {
        let (a, b) = (2 * i, 2 * i + 1);
        if d % 2 == 0 && i + 1 == full_pairs {
            m[a] = cipher.encrypt(hi.value() ^ c[b]) ^ c[a];
            m[b] = cipher.encrypt(lo.value() ^ m[a]) ^ c[b];
        } else {
            m[a] = cipher.encrypt(hi.value() ^ c[a]) ^ c[b];
            m[b] = cipher.encrypt(lo.value() ^ m[a]) ^ c[a];
        }
    }
    if d % 2 == 1 {
        m[d - 1] = cipher.encrypt(masks[full_pairs].0.value()) ^ c[d - 1];
    }
    m
}

/// One OTR session: cipher, field, nonce, and the nonce-derived secrets.
#[derive(Clone, Debug)]
pub struct OtrInstance {
    cipher: KeyedCipher,
    spec: FieldSpec,
    nonce: u32,
    delta: FieldElement,
    l: FieldElement,
    lstar: FieldElement,
    coeff_override: Option<(usize, u32)>,
}

impl OtrInstance {
    /// Derives `delta = E(N)` and `L = E(N ^ 1)`.
    pub fn new(cipher: KeyedCipher, spec: FieldSpec, nonce: u32) -> Result<Self> {
        if cipher.width() != spec.width() {
            return Err(Error::FieldMismatch);
        }
        spec.element(nonce)?;
        let delta = spec.element(cipher.encrypt(nonce))?;
        let l = spec.element(cipher.encrypt(nonce ^ 1))?;
        if delta.is_zero() || l.is_zero() {
            return Err(Error::DegenerateNonce(nonce));
        }
        Ok(Self { cipher, spec, nonce, delta, l, lstar: l + delta, coeff_override: None })
    }

    /// Replaces the even-length tag coefficient for `d`-block messages in the
    /// encryption path only. Exists so self-checks can prove they detect a
    /// corrupted constant.
    pub fn with_tag_coefficient_override(mut self, d: usize, coeff: u32) -> Self {
        self.coeff_override = Some((d, coeff));
        self
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn width(&self) -> u32 {
        self.spec.width()
    }

    pub fn nonce(&self) -> u32 {
        self.nonce
    }

    pub fn delta(&self) -> FieldElement {
        self.delta
    }

    pub fn l(&self) -> FieldElement {
        self.l
    }

    pub fn lstar(&self) -> FieldElement {
        self.lstar
    }

    pub fn cipher(&self) -> &KeyedCipher {
        &self.cipher
    }

    fn e(&self, x: u32) -> u32 {
        self.cipher.encrypt(x)
    }

    fn tag_mask(&self, d: usize) -> u32 {
        if d % 2 == 1 {
            return (self.spec.constant(3) * self.lstar + self.delta).value();
        }
        let coeff = match self.coeff_override {
            Some((od, c)) if od == d => self.spec.constant(c as u64),
            _ => tag_coefficient(self.spec, d),
        };
        (coeff * self.delta).value()
    }

    /// Tag of a plaintext: `E(3L* ^ delta ^ Σ)` for odd `d`, `E(coeff(d)·delta ^ Σ)`
    /// for even `d`.
    pub fn tag_plaintext(&self, m: &Blocks) -> u32 {
        self.e(self.tag_mask(m.len()) ^ checksum(m.as_slice()))
    }

    pub fn encrypt(&self, m: &Blocks) -> TaggedCiphertext {
        let c = feistel_encrypt(&self.cipher, self.delta, m.as_slice());
        TaggedCiphertext { blocks: Blocks { items: c }, tag: self.tag_plaintext(m) }
    }

    pub fn decrypt(&self, c: &Blocks) -> Blocks {
        Blocks { items: feistel_decrypt(&self.cipher, self.delta, c.as_slice()) }
    }

    pub fn verify(&self, ct: &TaggedCiphertext) -> bool {
        self.tag_ciphertext(&ct.blocks) == ct.tag
    }

    /// Decrypt-then-tag for any length.
    pub fn tag_ciphertext(&self, c: &Blocks) -> u32 {
        self.tag_plaintext(&self.decrypt(c))
    }

    /// Tag as a closed-form expression in the ciphertext blocks. For `d = 5`
    /// and `d = 4` the nested expressions are evaluated literally; other
    /// lengths fall back to decrypt-then-tag.
    pub fn tag_from_ciphertext(&self, c: &Blocks) -> u32 {
        let k = |v: u64| self.spec.constant(v) * self.delta;
        let e = |x: u32| self.e(x);
        match c.len() {
            5 => {
                let (c1, c2, c3, c4, c5) = (c.at(1), c.at(2), c.at(3), c.at(4), c.at(5));
                let lead = (self.spec.constant(3) * self.lstar + self.delta).value();
                e(lead
                    ^ e(k(4).value() ^ e(k(5).value() ^ c1) ^ c2)
                    ^ c1
                    ^ e(k(8).value() ^ e(k(9).value() ^ c3) ^ c4)
                    ^ c3
                    ^ e(k(16).value())
                    ^ c5)
            }
            4 => {
                let (c1, c2, c3, c4) = (c.at(1), c.at(2), c.at(3), c.at(4));
                e(k(26).value()
                    ^ e(k(4).value() ^ e(k(5).value() ^ c1) ^ c2)
                    ^ c1
                    ^ e(k(8).value() ^ e(k(9).value() ^ c4) ^ c3)
                    ^ c4)
            }
            _ => self.tag_ciphertext(c),
        }
    }
}

/// One Prost-OTR-Even-Mansour session. Masks are multiples of `L = EM(N)`.
#[derive(Clone, Debug)]
pub struct ProstOtrInstance {
    em: EvenMansourCipher,
    spec: FieldSpec,
    nonce: u32,
    l: FieldElement,
}

impl ProstOtrInstance {
    pub fn new(em: EvenMansourCipher, spec: FieldSpec, nonce: u32) -> Result<Self> {
        if em.width() != spec.width() {
            return Err(Error::FieldMismatch);
        }
        spec.element(nonce)?;
        let l = spec.element(em.encrypt(nonce))?;
        if l.is_zero() {
            return Err(Error::DegenerateNonce(nonce));
        }
        Ok(Self { em, spec, nonce, l })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn width(&self) -> u32 {
        self.spec.width()
    }

    pub fn nonce(&self) -> u32 {
        self.nonce
    }

    pub fn l(&self) -> FieldElement {
        self.l
    }

    pub fn cipher(&self) -> &EvenMansourCipher {
        &self.em
    }

    /// `k2 ^ P(Σ ^ coeff(d)·L ^ k1)`.
    pub fn tag_plaintext(&self, m: &Blocks) -> u32 {
        let mask = (tag_coefficient(self.spec, m.len()) * self.l).value();
        self.em.encrypt(checksum(m.as_slice()) ^ mask)
    }

    pub fn encrypt(&self, m: &Blocks) -> TaggedCiphertext {
        let c = feistel_encrypt(&self.em, self.l, m.as_slice());
        TaggedCiphertext { blocks: Blocks { items: c }, tag: self.tag_plaintext(m) }
    }

    pub fn decrypt(&self, c: &Blocks) -> Blocks {
        Blocks { items: feistel_decrypt(&self.em, self.l, c.as_slice()) }
    }

    pub fn verify(&self, ct: &TaggedCiphertext) -> bool {
        self.tag_plaintext(&self.decrypt(&ct.blocks)) == ct.tag
    }
}
