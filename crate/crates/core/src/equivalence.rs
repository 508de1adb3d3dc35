//! Pointwise agreement between the algebraic Barrett map and its
//! natural-number form, and transfer of the multiplicity bound between them.
//!
//! Alongside equality the checker asserts the two case invariants behind it:
//! with `m <= x` the natural sum `x + 2^s - m` wraps exactly once and reduces
//! to `x - m < q`; with `m > x` the sum already lies in `(0, 2^s)`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::composition::Budget;
use crate::field::Modulus;
use crate::gadget::GadgetSpec;
use crate::multiplicity::{self, fill_counts, MultiplicityReport};
use crate::{Error, Executor, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCase {
    NoWrap,
    Wrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum EquivalenceOutcome {
    Equal,
    Mismatch {
        x: u32,
        m: u32,
        algebraic: u32,
        nat: u32,
    },
    /// Values agreed but a case invariant failed at `(x, m)`.
    CaseInvariantFailed { x: u32, m: u32, case: ProofCase },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub q: u32,
    pub s: u32,
    pub scope_ok: bool,
    pub checked_pairs: u64,
    pub no_wrap_pairs: u64,
    pub wrap_pairs: u64,
    #[serde(flatten)]
    pub outcome: EquivalenceOutcome,
}

impl EquivalenceReport {
    pub fn is_equal(&self) -> bool {
        self.outcome == EquivalenceOutcome::Equal
    }
}

struct RowResult {
    no_wrap: u64,
    wrap: u64,
    first_failure: Option<EquivalenceOutcome>,
}

fn check_row(x: u32, q: u32, s: u32, wrap_const: u32) -> RowResult {
    let r = 1u64 << s;
    let q64 = q as u64;
    let xv = x as u64;
    let mut out = RowResult {
        no_wrap: 0,
        wrap: 0,
        first_failure: None,
    };
    for m in 0..q {
        let mv = m as u64;
        // algebraic branch, evaluated in Z_q
        let diff = (xv + q64 - mv) % q64;
        let algebraic = if m <= x {
            diff
        } else {
            (diff + wrap_const as u64) % q64
        };
        let sum = xv + r - mv;
        let reduced = sum % r;
        let nat = reduced % q64;

        let (case, invariant) = if m <= x {
            out.no_wrap += 1;
            (
                ProofCase::NoWrap,
                sum >= r && reduced == xv - mv && xv - mv < q64 && nat == xv - mv,
            )
        } else {
            out.wrap += 1;
            (ProofCase::Wrap, sum > 0 && sum < r && reduced == sum)
        };

        if out.first_failure.is_none() {
            if algebraic != nat {
                out.first_failure = Some(EquivalenceOutcome::Mismatch {
                    x,
                    m,
                    algebraic: algebraic as u32,
                    nat: nat as u32,
                });
            } else if !invariant {
                out.first_failure = Some(EquivalenceOutcome::CaseInvariantFailed { x, m, case });
            }
        }
    }
    out
}

/// Compares both Barrett maps on every `(x, m)` in `Z_q^2`.
pub fn check_equivalence<E: Executor>(
    modulus: Modulus,
    s: u32,
    exec: &E,
    budget: Budget,
) -> Result<EquivalenceReport> {
    modulus.check_scope(s)?;
    let q = modulus.q();
    budget.check(q as u128 * q as u128)?;
    let wrap_const = modulus.pow2(s).val();
    let rows = exec.map(q as usize, |x| check_row(x as u32, q, s, wrap_const));
    let mut report = EquivalenceReport {
        q,
        s,
        scope_ok: true,
        checked_pairs: 0,
        no_wrap_pairs: 0,
        wrap_pairs: 0,
        outcome: EquivalenceOutcome::Equal,
    };
    // rows arrive in x order, so the first failure seen is the smallest (x, m)
    for row in rows {
        report.no_wrap_pairs += row.no_wrap;
        report.wrap_pairs += row.wrap;
        if report.outcome == EquivalenceOutcome::Equal {
            if let Some(f) = row.first_failure {
                report.outcome = f;
            }
        }
    }
    report.checked_pairs = report.no_wrap_pairs + report.wrap_pairs;
    Ok(report)
}

/// Measures the natural-number Barrett map and confirms every histogram cell
/// matches the algebraic map's.
pub fn transfer_bound<E: Executor>(
    modulus: Modulus,
    s: u32,
    exec: &E,
    budget: Budget,
) -> Result<MultiplicityReport> {
    let nat = GadgetSpec::barrett_nat(modulus, Some(s))?;
    let alg = GadgetSpec::barrett_algebraic(modulus, Some(s));
    let q = modulus.q();
    budget.check(2 * q as u128 * q as u128)?;
    let mismatches: Vec<Option<Error>> = exec.map(q as usize, |x| {
        let mut a = vec![0u32; q as usize];
        let mut n = vec![0u32; q as usize];
        fill_counts(&alg, x as u32, &mut a);
        fill_counts(&nat, x as u32, &mut n);
        a.iter()
            .zip(&n)
            .position(|(p, r)| p != r)
            .map(|v| Error::CountMismatch {
                x: x as u32,
                v: v as u32,
                algebraic: a[v],
                nat: n[v],
            })
    });
    if let Some(e) = mismatches.into_iter().flatten().next() {
        return Err(e);
    }
    let alg_report = multiplicity::measure_exhaustive(&alg, exec);
    let nat_report = multiplicity::measure_exhaustive(&nat, exec);
    debug_assert_eq!(alg_report.per_secret, nat_report.per_secret);
    Ok(nat_report)
}
