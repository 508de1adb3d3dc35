//! Modular arithmetic over `Z_q` and the widths used by the natural-number maps.
//!
//! Residues carry no modulus of their own. The [`Modulus`] is passed by context
//! so that inner enumeration loops work on bare `u32` values; every constructor
//! that accepts an arbitrary integer reduces it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported modulus. Keeps `q^2` inside a `u64`.
pub const MAX_MODULUS: u32 = (1 << 31) - 1;

/// Largest supported reduction width `s`, so that `x + 2^s` fits a `u64`.
pub const MAX_WIDTH: u32 = 62;

/// An element of `Z_q`, stored as its canonical representative `0 <= val < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Residue(u32);

impl Residue {
    #[inline]
    pub const fn val(self) -> u32 {
        self.0
    }

    /// Wraps an already-reduced value. Callers guarantee `val < q`.
    #[inline]
    pub(crate) const fn from_reduced(val: u32) -> Self {
        Residue(val)
    }
}

impl core::fmt::Display for Residue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Modulus {
    q: u32,
}

impl TryFrom<u32> for Modulus {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        Modulus::new(q as u64)
    }
}

impl From<Modulus> for u32 {
    fn from(m: Modulus) -> u32 {
        m.q
    }
}

impl Modulus {
    pub fn new(q: u64) -> Result<Self> {
        if q == 0 || q > MAX_MODULUS as u64 {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Modulus { q: q as u32 })
    }

    #[inline]
    pub const fn q(self) -> u32 {
        self.q
    }

    /// Reduces any integer into `Z_q`.
    #[inline]
    pub fn residue(self, value: u64) -> Residue {
        Residue((value % self.q as u64) as u32)
    }

    /// Accepts `value` only if it is already a canonical representative.
    pub fn checked_residue(self, value: u64) -> Result<Residue> {
        if value < self.q as u64 {
            Ok(Residue(value as u32))
        } else {
            Err(Error::InvalidResidue { value, q: self.q })
        }
    }

    /// Iterates `0, 1, ..., q - 1`.
    pub fn elements(self) -> impl DoubleEndedIterator<Item = Residue> + ExactSizeIterator {
        (0..self.q).map(Residue)
    }

    #[inline]
    pub fn add(self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a.0 < self.q && b.0 < self.q);
        Residue(((a.0 as u64 + b.0 as u64) % self.q as u64) as u32)
    }

    /// The unique `c` with `c + b = a (mod q)`.
    #[inline]
    pub fn sub(self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a.0 < self.q && b.0 < self.q);
        Residue(((a.0 as u64 + self.q as u64 - b.0 as u64) % self.q as u64) as u32)
    }

    /// `2^s mod q`, for any `s`.
    pub fn pow2(self, s: u32) -> Residue {
        let q = self.q as u64;
        let mut acc = 1 % q;
        let mut base = 2 % q;
        let mut e = s;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        Residue(acc as u32)
    }

    /// Smallest `s` with `2^s >= q`.
    pub fn default_width(self) -> u32 {
        // q >= 1, so (q - 1) has at most 31 significant bits.
        32 - (self.q - 1).leading_zeros()
    }

    /// Checks the scope condition `q <= 2^s` of the natural-number maps.
    pub fn check_scope(self, s: u32) -> Result<()> {
        if s > MAX_WIDTH {
            return Err(Error::WidthTooLarge(s));
        }
        if (self.q as u64) > (1u64 << s) {
            return Err(Error::ScopeViolation { q: self.q, s });
        }
        Ok(())
    }
}

/// `(a + b) mod q`.
#[inline]
pub fn add_mod(a: Residue, b: Residue, q: Modulus) -> Residue {
    q.add(a, b)
}

/// `(a + q - b) mod q`.
#[inline]
pub fn sub_mod(a: Residue, b: Residue, q: Modulus) -> Residue {
    q.sub(a, b)
}
