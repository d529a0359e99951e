//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (nonpositive length,
    /// zero divisor, singular kernel argument, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An array element coincides with the single-antenna endpoint.
    #[error("degenerate geometry: element {index} is at zero distance from the link endpoint")]
    DegenerateGeometry { index: usize },

    /// A dense factorization found the matrix singular to working precision.
    /// `condition_estimate` is the pivot-magnitude ratio max/min of the partial
    /// pivoting factorization, a cheap lower estimate of the condition number.
    #[error(
        "{context}: matrix singular to working precision \
         (pivot ratio {pivot_ratio:.3e}, condition estimate {condition_estimate:.3e})"
    )]
    IllConditioned {
        context: String,
        pivot_ratio: f64,
        condition_estimate: f64,
    },

    /// The rank-one update denominator of a Sherman-Morrison step is too small.
    #[error("rank-one update is near singular: |denominator| = {denominator:.3e}")]
    NearSingularUpdate { denominator: f64 },

    /// Refusing to materialize a structured matrix past the configured cap.
    #[error("dense materialization of a {n}x{n} matrix exceeds the cap of {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A sweep aborted; `n` identifies the offending grid point.
    #[error("sweep aborted at N = {n}")]
    SweepRow {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
