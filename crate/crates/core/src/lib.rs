//! Exact multiplicity analysis for arithmetically masked gadgets over `Z_q`.
//!
//! A masked gadget maps a secret `x` and a uniform mask `m` to an output wire
//! `G(x, m)`. Its PF-PINI parameter is the largest number of masks that send a
//! fixed secret to a single output value. This crate measures that parameter by
//! enumeration, builds multi-stage pipelines with or without fresh inter-stage
//! masks, and counts the exact distribution of every wire in them.
//!
//! The crate is `no_std` with `alloc`. Parallel work is expressed through the
//! [`Executor`] trait; [`Sequential`] is the built-in implementation and a
//! threaded one lives in the `pfpini` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod composition;
pub mod diagnosis;
pub mod equivalence;
mod error;
mod exec;
pub mod field;
pub mod gadget;
pub mod multiplicity;
pub mod scan;

pub use composition::{
    Analyzer, Budget, CompositionReport, ContrastReport, CountingMethod, PipelineSpec, Tv,
    WireDistribution, WireId,
};
pub use diagnosis::{diagnose_bridge, BridgeDiagnosis, BridgePreset, DiagnosisOptions};
pub use equivalence::{check_equivalence, transfer_bound, EquivalenceOutcome, EquivalenceReport};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use field::{Modulus, Residue};
pub use gadget::{GadgetKind, GadgetSpec};
pub use multiplicity::{
    count_histogram, measure_exhaustive, measure_sampled, verify_claim, CountHistogram,
    MultiplicityReport, Verdict,
};
pub use scan::{scan_montgomery, ScanOptions, ScanReport, ScanRow};
