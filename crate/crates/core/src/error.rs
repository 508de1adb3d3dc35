use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} out of range (need 1 <= q <= 2^31 - 1)")]
    InvalidModulus(u64),
    /// `q > 2^s`: the natural-number maps are not certified at this width.
    #[error("scope violation: q = {q} exceeds 2^{s}")]
    ScopeViolation { q: u32, s: u32 },
    #[error("width s = {0} too large (max {max})", max = crate::field::MAX_WIDTH)]
    WidthTooLarge(u32),
    #[error("invalid table: {0}")]
    InvalidTable(alloc::string::String),
    #[error("claimed multiplicity must be at least 1")]
    InvalidClaim,
    #[error("enumeration needs {required} evaluations, budget is {cap}")]
    BudgetExceeded { required: u128, cap: u64 },
    #[error("pipeline needs at least one stage")]
    EmptyPipeline,
    #[error("pipeline with {stages} stages needs {expected} fresh flags, got {got}")]
    FreshFlags {
        stages: usize,
        expected: usize,
        got: usize,
    },
    #[error("stage {stage} uses modulus {found}, pipeline uses {expected}")]
    ModulusMismatch {
        stage: usize,
        expected: u32,
        found: u32,
    },
    #[error("residue {value} is not below q = {q}")]
    InvalidResidue { value: u64, q: u32 },
    #[error("wire {0} does not exist in this pipeline")]
    InvalidWire(alloc::string::String),
    #[error("cannot draw {n} distinct secrets from Z_{q}")]
    SampleSize { n: u64, q: u32 },
    /// Per-cell multiplicity differs between the algebraic and natural maps.
    #[error("count mismatch at x = {x}, v = {v}: algebraic {algebraic}, nat {nat}")]
    CountMismatch {
        x: u32,
        v: u32,
        algebraic: u32,
        nat: u32,
    },
}
