//! Single-mask gadgets `Z_q x Z_q -> Z_q` and their claimed PF-PINI parameter.
//!
//! The claimed parameter is metadata. Nothing in this crate trusts it; the
//! multiplicity engine measures the real value and compares.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::field::{Modulus, Residue};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetKind {
    /// `x - m`.
    Butterfly,
    /// `x - m` if `m <= x`, else `x - m + (2^s mod q)`, all in `Z_q`.
    BarrettAlgebraic { s: u32, wrap: u32 },
    /// `((x + 2^s - m) mod 2^s) mod q` in natural numbers.
    BarrettNat { s: u32 },
    /// `((x + R - m) mod R) mod q` with `R = 2^s`.
    Montgomery { s: u32 },
    /// Row-major `q x q` lookup: `table[x * q + m]`.
    Table(Arc<[u32]>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetSpec {
    name: String,
    modulus: Modulus,
    kind: GadgetKind,
    claimed_k: u32,
}

impl GadgetSpec {
    /// The masked NTT butterfly `x - m`, claimed PF-PINI(1).
    pub fn butterfly(modulus: Modulus) -> Self {
        GadgetSpec {
            name: "butterfly".into(),
            modulus,
            kind: GadgetKind::Butterfly,
            claimed_k: 1,
        }
    }

    /// Two-branch algebraic Barrett internal map. `None` picks the smallest
    /// `s` with `2^s >= q`. No scope condition applies to this map.
    pub fn barrett_algebraic(modulus: Modulus, s: Option<u32>) -> Self {
        let s = s.unwrap_or_else(|| modulus.default_width());
        GadgetSpec {
            name: "barrett-alg".into(),
            modulus,
            kind: GadgetKind::BarrettAlgebraic {
                s,
                wrap: modulus.pow2(s).val(),
            },
            claimed_k: 2,
        }
    }

    /// Hardware-faithful Barrett map. Requires `q <= 2^s`.
    pub fn barrett_nat(modulus: Modulus, s: Option<u32>) -> Result<Self> {
        let s = s.unwrap_or_else(|| modulus.default_width());
        modulus.check_scope(s)?;
        Ok(GadgetSpec {
            name: "barrett-nat".into(),
            modulus,
            kind: GadgetKind::BarrettNat { s },
            claimed_k: 2,
        })
    }

    /// Montgomery-style map `(x + R - m) mod R mod q`. Requires `q <= 2^s`.
    pub fn montgomery(modulus: Modulus, s: Option<u32>) -> Result<Self> {
        let s = s.unwrap_or_else(|| modulus.default_width());
        modulus.check_scope(s)?;
        Ok(GadgetSpec {
            name: "montgomery".into(),
            modulus,
            kind: GadgetKind::Montgomery { s },
            claimed_k: 2,
        })
    }

    /// Lookup-table gadget; `table[x * q + m]` is the output for `(x, m)`.
    pub fn custom(
        name: impl Into<String>,
        modulus: Modulus,
        table: Vec<u32>,
        claimed_k: u32,
    ) -> Result<Self> {
        let q = modulus.q() as usize;
        if table.len() != q * q {
            return Err(Error::InvalidTable(format!(
                "expected {} entries, got {}",
                q * q,
                table.len()
            )));
        }
        if let Some(pos) = table.iter().position(|&v| v >= modulus.q()) {
            return Err(Error::InvalidTable(format!(
                "entry {} at x = {}, m = {} is not below q = {}",
                table[pos],
                pos / q,
                pos % q,
                q
            )));
        }
        if claimed_k == 0 {
            return Err(Error::InvalidClaim);
        }
        Ok(GadgetSpec {
            name: name.into(),
            modulus,
            kind: GadgetKind::Table(table.into()),
            claimed_k,
        })
    }

    /// Parses the text table format: a line holding `q`, then `q` rows of `q`
    /// whitespace-separated outputs (row = secret, column = mask).
    pub fn parse_table(name: impl Into<String>, text: &str, claimed_k: u32) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidTable("empty table".into()))?;
        let q: u64 = header
            .parse()
            .map_err(|_| Error::InvalidTable(format!("bad modulus line {header:?}")))?;
        let modulus = Modulus::new(q)?;
        let q = q as usize;
        let mut table = Vec::with_capacity(q * q);
        for row in 0..q {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidTable(format!("missing row {row}")))?;
            let before = table.len();
            for tok in line.split_whitespace() {
                let v: u32 = tok
                    .parse()
                    .map_err(|_| Error::InvalidTable(format!("bad entry {tok:?} in row {row}")))?;
                table.push(v);
            }
            if table.len() - before != q {
                return Err(Error::InvalidTable(format!(
                    "row {row} has {} entries, expected {q}",
                    table.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::InvalidTable("trailing rows after table".into()));
        }
        Self::custom(name, modulus, table, claimed_k)
    }

    /// Renders the table format read by [`GadgetSpec::parse_table`].
    pub fn to_table_text(&self) -> String {
        let mut out = self.modulus.q().to_string();
        out.push('\n');
        for x in self.modulus.elements() {
            let row: Vec<String> = self
                .modulus
                .elements()
                .map(|m| self.compute(x, m).val().to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn kind(&self) -> &GadgetKind {
        &self.kind
    }

    pub fn claimed_k(&self) -> u32 {
        self.claimed_k
    }

    pub fn with_claimed_k(mut self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidClaim);
        }
        self.claimed_k = k;
        Ok(self)
    }

    /// Reduction width, for gadgets that have one.
    pub fn width(&self) -> Option<u32> {
        match self.kind {
            GadgetKind::BarrettAlgebraic { s, .. }
            | GadgetKind::BarrettNat { s }
            | GadgetKind::Montgomery { s } => Some(s),
            GadgetKind::Butterfly | GadgetKind::Table(_) => None,
        }
    }

    #[inline]
    pub fn compute(&self, x: Residue, m: Residue) -> Residue {
        Residue::from_reduced(self.compute_raw(x.val(), m.val()))
    }

    /// [`GadgetSpec::compute`] on bare values; both inputs must be below `q`.
    #[inline]
    pub fn compute_raw(&self, x: u32, m: u32) -> u32 {
        let q = self.modulus.q();
        debug_assert!(x < q && m < q);
        match &self.kind {
            GadgetKind::Butterfly => sub_raw(x, m, q),
            GadgetKind::BarrettAlgebraic { wrap, .. } => {
                let d = sub_raw(x, m, q);
                if m <= x {
                    d
                } else {
                    ((d as u64 + *wrap as u64) % q as u64) as u32
                }
            }
            GadgetKind::BarrettNat { s } | GadgetKind::Montgomery { s } => {
                let r = 1u64 << s;
                (((x as u64 + r - m as u64) % r) % q as u64) as u32
            }
            GadgetKind::Table(t) => t[x as usize * q as usize + m as usize],
        }
    }
}

#[inline]
pub(crate) fn sub_raw(a: u32, b: u32, q: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        ((a as u64 + q as u64) - b as u64) as u32
    }
}
