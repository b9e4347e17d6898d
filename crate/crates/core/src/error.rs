use std::io;

use thiserror::Error;

use crate::pbf::{TermId, VarId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PBF document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed sweep config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("variable {0} appears twice in one term")]
    DuplicateVariable(VarId),

    #[error("variable {var} outside 1..={n}")]
    VariableOutOfRange { var: u32, n: u32 },

    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),

    #[error("monomial coefficient must be nonzero")]
    ZeroCoefficient,

    #[error("assignment has no value for {0}")]
    MissingVariable(VarId),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pair ({0}, {1}) has multiplicity {2}, expected at least 2")]
    MultiplicityTooLow(VarId, VarId, usize),

    #[error("label z{0} on pair ({1}, {2}) does not index a monomial containing both variables")]
    CorruptLabel(TermId, VarId, VarId),

    #[error("edge ({0}, {1}, z{2}) missing from graph")]
    MissingEdge(VarId, VarId, TermId),

    #[error("multiplicity index is empty")]
    EmptyIndex,

    #[error("no monomial of degree above {0}")]
    NothingToReduce(usize),

    #[error("pair ({0}, {1}) occurs in no monomial")]
    PairNotPresent(VarId, VarId),

    #[error("{needed} total bits exceed the exhaustive cap of {cap}")]
    BitCapExceeded { needed: usize, cap: usize },

    #[error("reduction exceeded its deadline")]
    TimedOut,

    #[error("invariant violated: {0}")]
    Invariant(String),
}
