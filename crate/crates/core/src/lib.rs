//! Graph spectral filtering with Bernstein polynomial bases.
//!
//! The normalized Laplacian of an undirected graph has its spectrum in
//! [0,2]. Any filter response on that interval can be approximated by an
//! order-K Bernstein combination whose coefficients are plain samples of
//! the response at 2k/K, applied to signals through sparse products alone.
//! Because the basis is non-negative and sums to one, coefficient bounds
//! become response bounds, which is what makes designed and learned filters
//! verifiably valid.
//!
//! Modules:
//! - [`graph`]: CSR graphs and matrix-free normalized operators;
//! - [`bernstein`]: basis evaluation, design, catalog, validity checking;
//! - [`oracle`]: dense eigendecomposition and exact filtering for tests;
//! - [`propagation`]: the sparse convolution and its per-term caches;
//! - [`learn`]: fitting non-negative coefficients to signal pairs;
//! - [`classify`]: perceptron-plus-propagation node classification;
//! - [`io`]: text formats, dataset directories, synthetic tasks.
//!
//! The `parallel` feature (on by default) runs the matrix propagation
//! kernels and multi-split training on a rayon pool; outputs are identical
//! to the sequential build.

pub mod bernstein;
pub mod classify;
pub mod dense;
pub mod error;
pub mod graph;
pub mod io;
pub mod learn;
pub mod optim;
pub mod oracle;
pub mod propagation;

pub use bernstein::{
    bernstein_basis, design_coeffs, eval_filter, monomial_to_bernstein, named_filter,
    validate_filter, BernCoeffs, FilterFn, ValidityReport, MAX_ORDER, NAMED_FILTERS,
};
pub use dense::Matrix;
pub use error::{Error, Result};
pub use graph::{build_graph, grid_graph, Graph, NormalizedOperator, OperatorMode};
pub use learn::{
    learn_filter, make_regression_task, sse_and_r2, FitReport, LearnConfig, RegressionTask,
};
pub use oracle::{
    eigendecompose, energy_solution, exact_filter_apply, heat_suffix_sum, ppr_suffix_sum,
    SpectralDecomposition,
};
pub use propagation::{apply_filter, apply_filter_matrix, BasisCache, MatrixBasisCache};
