//! Multiplication-free dimension reduction by element selection.
//!
//! Given the second-order moments of an input vector x and a target
//! vector z, this crate finds a K-element subset of x's components that
//! minimizes the mean-squared error of the best linear regression from
//! the selected elements to z (with z = x this is reconstruction error).
//! Applying the resulting reduction at inference costs zero
//! multiplications: it just copies K elements.
//!
//! The search is a swap-based local improvement over selections. Its
//! inner loop evaluates the objective change of every candidate swap
//! through a rank-2 inverse update that reduces the per-candidate cost
//! to a 2x2 inversion plus a few matrix-vector products; see [`swap`].
//! [`moments`] holds the direct (slow, trusted) evaluation path,
//! [`baselines`] the PCA / variance / random-projection references,
//! [`dataset`] ingestion and moment estimation, and [`io`] the on-disk
//! formats.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod io;
pub mod matrix;
pub mod moments;
pub mod swap;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{CrossMatrix, Mat, SymMatrix};
pub use moments::{
    largest_eigenvalue, normalized_loss, objective, objective_selected, optimal_decoder,
    regularize, IndexSet, ModelKind, ReductionModel, DEFAULT_REG_EPS,
};
pub use swap::{
    binomial_estimate, binomial_exact, build_state, delta_j_fast, delta_j_naive,
    exhaustive_search, optimize, sweep, sweep_with, swap_vectors, verify_local_optimum,
    DeltaMode, InitSpec, ObjectiveTrace, SearchConfig, SelectionState, SweepRecord, SwapDelta,
    DEFAULT_EPS_REL,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
