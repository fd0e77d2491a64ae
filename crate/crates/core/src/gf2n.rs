//! Arithmetic in GF(2^n) for small widths.
//!
//! Elements are bit patterns of polynomials over GF(2); bit `i` is the
//! coefficient of `x^i`. Integer constants such as 26 are embedded by their
//! bit pattern and multiplied carry-less, so `3 * 3` is `0b101`, not 9.

use std::fmt;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

pub const MIN_WIDTH: u32 = 6;
pub const MAX_WIDTH: u32 = 16;

/// x^8 + x^4 + x^3 + x + 1
pub const DEFAULT_POLY_8: u32 = 0x11b;

/// Width and reduction polynomial of a binary extension field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    width: u32,
    poly: u32,
}

impl FieldSpec {
    /// Builds a field spec after checking the width range and that `poly`
    /// is an irreducible polynomial of degree exactly `width`.
    pub fn new(width: u32, poly: u32) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::WidthOutOfRange(width));
        }
        if degree(poly as u64) != Some(width) || poly & 1 == 0 || !is_irreducible(poly) {
            return Err(Error::ReducibleModulus { width, poly });
        }
        Ok(Self { width, poly })
    }

    /// The field at `width` bits with a fixed default modulus.
    pub fn with_default_poly(width: u32) -> Result<Self> {
        let poly = default_poly(width).ok_or(Error::WidthOutOfRange(width))?;
        Self::new(width, poly)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Mask of the low `width` bits.
    pub fn mask(&self) -> u32 {
        (1u32 << self.width) - 1
    }

    pub fn order(&self) -> usize {
        1usize << self.width
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, spec: *self }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, spec: *self }
    }

    /// Wraps a raw value; fails if it does not fit in `width` bits.
    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value > self.mask() {
            return Err(Error::ValueOutOfRange { value, width: self.width });
        }
        Ok(FieldElement { value, spec: *self })
    }

    /// Embeds a small integer by its bit pattern, reduced modulo the field
    /// polynomial.
    pub fn constant(&self, k: u64) -> FieldElement {
        FieldElement { value: reduce(k, self.poly, self.width), spec: *self }
    }

    /// `x^k` reduced, i.e. the constant `2^k` embedded in the field.
    pub fn pow2(&self, k: u32) -> FieldElement {
        let mut e = self.one();
        for _ in 0..k {
            e = e.double();
        }
        e
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { width: 8, poly: DEFAULT_POLY_8 }
    }
}

/// Low-weight irreducible polynomials for every supported width.
pub fn default_poly(width: u32) -> Option<u32> {
    let poly = match width {
        6 => 0x43,     // x^6 + x + 1
        7 => 0x83,     // x^7 + x + 1
        8 => DEFAULT_POLY_8,
        9 => 0x211,    // x^9 + x^4 + 1
        10 => 0x409,   // x^10 + x^3 + 1
        11 => 0x805,   // x^11 + x^2 + 1
        12 => 0x1053,  // x^12 + x^6 + x^4 + x + 1
        13 => 0x201b,  // x^13 + x^4 + x^3 + x + 1
        14 => 0x4443,  // x^14 + x^10 + x^6 + x + 1
        15 => 0x8003,  // x^15 + x + 1
        16 => 0x1100b, // x^16 + x^12 + x^3 + x + 1
        _ => return None,
    };
    Some(poly)
}

/// An element of GF(2^n), tagged with the field it lives in.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { value: self.value ^ other.value, spec: self.spec })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let product = clmul(self.value, other.value);
        Ok(Self { value: reduce(product, self.spec.poly, self.spec.width), spec: self.spec })
    }

    /// Multiplication by `x` (xtime).
    pub fn double(&self) -> Self {
        let shifted = self.value << 1;
        let value = if shifted >> self.spec.width & 1 == 1 {
            shifted ^ self.spec.poly
        } else {
            shifted
        };
        Self { value, spec: self.spec }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm on
    /// polynomials.
    pub fn inv(&self) -> Result<Self> {
        if self.value == 0 {
            return Err(Error::ZeroInverse);
        }
        // invariant: s_i * a == r_i (mod poly)
        let (mut r0, mut r1) = (self.spec.poly as u64, self.value as u64);
        let (mut s0, mut s1) = (0u64, 1u64);
        while r1 != 0 {
            let (q, r) = poly_divmod(r0, r1);
            r0 = r1;
            r1 = r;
            let s = s0 ^ clmul64(q, s1);
            s0 = s1;
            s1 = s;
        }
        debug_assert_eq!(r0, 1, "modulus is irreducible");
        Ok(Self { value: reduce(s0, self.spec.poly, self.spec.width), spec: self.spec })
    }
}

impl Add for FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: Self) -> Self {
        self.try_add(&rhs).expect("field elements from different fields")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: Self) -> Self {
        self.try_mul(&rhs).expect("field elements from different fields")
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement({:#x} in GF(2^{}))", self.value, self.spec.width)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.value)
    }
}

fn degree(p: u64) -> Option<u32> {
    (p != 0).then(|| 63 - p.leading_zeros())
}

/// Carry-less product of two values of at most 32 bits.
fn clmul(a: u32, b: u32) -> u64 {
    clmul64(a as u64, b as u64)
}

fn clmul64(a: u64, mut b: u64) -> u64 {
    let mut acc = 0u64;
    let mut shifted = a;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= shifted;
        }
        shifted <<= 1;
        b >>= 1;
    }
    acc
}

fn poly_divmod(mut num: u64, den: u64) -> (u64, u64) {
    let dd = degree(den).expect("nonzero divisor");
    let mut q = 0u64;
    while let Some(dn) = degree(num) {
        if dn < dd {
            break;
        }
        q ^= 1 << (dn - dd);
        num ^= den << (dn - dd);
    }
    (q, num)
}

fn reduce(value: u64, poly: u32, width: u32) -> u32 {
    let (_, r) = poly_divmod(value, poly as u64);
    debug_assert!(r < 1 << width);
    r as u32
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible(poly: u32) -> bool {
    let Some(d) = degree(poly as u64) else { return false };
    if d == 0 {
        return false;
    }
    (2u64..1u64 << (d / 2 + 1)).all(|f| poly_divmod(poly as u64, f).1 != 0)
}
