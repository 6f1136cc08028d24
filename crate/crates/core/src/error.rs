//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {nodes} nodes")]
    NodeIndexOutOfRange { index: usize, nodes: usize },
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis index {k} exceeds order {order}")]
    BasisIndexOutOfRange { k: usize, order: usize },
    #[error("order {order} exceeds maximum supported order {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("coefficient vector is empty")]
    EmptyCoefficients,
    #[error("parameter t={t} outside [0,1]")]
    ParameterOutOfUnitInterval { t: f64 },
    #[error("lambda={lambda} outside the Laplacian spectrum range [0,2]")]
    LambdaOutOfRange { lambda: f64 },
    #[error("filter returned non-finite value at lambda={lambda}")]
    NonFiniteFilterValue { lambda: f64 },
    #[error("unknown filter name '{0}'")]
    UnknownFilter(String),
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("graph with {nodes} nodes exceeds the dense decomposition cap {cap}")]
    DenseCapExceeded { nodes: usize, cap: usize },
    #[error("operation requires the {expected} operator mode")]
    WrongOperatorMode { expected: &'static str },
    #[error("energy not positive semidefinite: gamma({lambda}) = {value}")]
    EnergyNotPsd { lambda: f64, value: f64 },
    #[error("parameter {name}={value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("jacobi eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },
    #[error("mask selects no nodes")]
    EmptyMask,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error("{file}: expected {expected} rows, found {found}")]
    RowCountMismatch {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    InvalidData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
