use std::io;

use thiserror::Error;

use crate::io::ViolationKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {kind}: {message}")]
    Format {
        kind: ViolationKind,
        line: usize,
        message: String,
    },

    #[error("invalid mapping: {0}")]
    Mapping(String),

    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),

    #[error("PE index {index} out of range (pe_count = {pe_count})")]
    PeOutOfRange { index: usize, pe_count: usize },

    #[error(
        "distance matrix for {pe_count} PEs exceeds the cap of {cap}; use the online distance oracle (hierarchyonline)"
    )]
    MatrixTooLarge { pe_count: usize, cap: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),

    #[error("invalid swap: {0}")]
    InvalidSwap(String),

    #[error("infeasible partition: {0}")]
    InfeasiblePartition(String),

    #[error("communication neighborhood has more than {cap} pairs; lower --communication_neighborhood_dist")]
    TooManyPairs { cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
