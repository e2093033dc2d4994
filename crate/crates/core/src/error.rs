use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A symmetric solve hit a non-positive pivot. The message names the
    /// matrix that failed (e.g. "P V_xx P^T" or "selected-block A").
    #[error("singular Gram matrix: {context}")]
    SingularGram { context: String },

    /// Power iteration did not reach the requested tolerance.
    #[error(
        "largest-eigenvalue estimate did not converge after {iterations} iterations \
         (last estimate {last_estimate:e})"
    )]
    PowerIteration {
        iterations: usize,
        last_estimate: f64,
    },

    /// Jacobi eigensolver exceeded its sweep budget.
    #[error("symmetric eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    /// The 2x2 capacitance matrix of a candidate swap is numerically singular.
    /// Callers treat the swap as non-improving.
    #[error("degenerate swap ({inner}, {outer}): 2x2 capacitance matrix is singular")]
    DegenerateSwap { inner: usize, outer: usize },

    /// Local search hit the sweep cap before reaching a fixed point. Carries
    /// the partial result; usually means the improvement threshold is below
    /// what the conditioning of the problem can resolve.
    #[error("no fixed point after {sweeps} sweeps (J = {j}); partial selection retained")]
    SweepLimit {
        sweeps: usize,
        j: f64,
        selected: Vec<usize>,
    },

    /// Exhaustive search refused: the number of K-subsets is over the limit.
    #[error(
        "exhaustive search over {n} choose {k} refused: \
         about 10^{log10_count:.2} selections exceeds the limit of {limit}"
    )]
    SearchSpaceTooLarge {
        n: usize,
        k: usize,
        log10_count: f64,
        limit: u64,
    },

    /// Malformed input bytes; `offset` points at the first offending byte.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Inconsistent dimensions between paired arguments.
    #[error("dimension mismatch: {0}")]
    Dim(String),

    /// Invalid run configuration (bad K, missing inputs, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
