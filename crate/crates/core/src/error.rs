use thiserror::Error;

use crate::certificates::Clause;
use crate::reductions::DecoderClass;

pub type Result<T, E = SciError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SciError {
    #[error("query budget of {budget} exhausted before the protocol produced an output")]
    BudgetExceeded { budget: usize },
    #[error("protocol produced an output without issuing any query")]
    EmptyTrace,
    #[error("query `{0}` is not in the evaluation family")]
    UnknownQuery(String),
    #[error("multi-index has {got} entries but the tower has height {expected}")]
    IndexArityMismatch { expected: usize, got: usize },
    #[error("stage indices start at 1, got {0}")]
    InvalidStageIndex(usize),
    #[error("finite-query table disagrees with the target on input {0}")]
    FactorizationMismatch(String),
    #[error("problem mismatch: expected `{expected}`, found `{found}`")]
    ProblemMismatch { expected: String, found: String },
    #[error("decoder classes {outer:?} and {inner:?} do not compose ({reason})")]
    TagIncompatible {
        outer: DecoderClass,
        inner: DecoderClass,
        reason: String,
    },
    #[error("query plan does not cover target query `{0}`")]
    PlanGap(String),
    #[error("reduction `{0}` has no passing verification report for this source")]
    UnverifiedReduction(String),
    #[error("height of `{0}` is only known as an interval")]
    IndeterminateHeight(String),
    #[error("clause {clause} fails: {detail}")]
    MissingClause { clause: Clause, detail: String },
    #[error("interval [{0}, {0}] is degenerate")]
    DegenerateInterval(String),
    #[error("window point {z} lies outside the domain [{lo}, {hi}]")]
    WindowOutsideDomain { z: String, lo: String, hi: String },
    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),
    #[error("grid rejected: {0}")]
    GridTooCoarse(String),
    #[error("Hausdorff distance needs two nonempty sets")]
    EmptySet,
    #[error("problem `{0}` has an empty input catalog")]
    EmptyInputClass(String),
    #[error("problem `{0}` has an empty evaluation family")]
    EmptyQueryFamily(String),
    #[error("a family record needs at least one member")]
    EmptyFamily,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("catalog error at {location}: {message}")]
    Catalog { location: String, message: String },
}

impl SciError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SciError::InvalidArgument(msg.into())
    }
}
