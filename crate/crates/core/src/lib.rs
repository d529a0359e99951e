//! Multiport impedance modeling of massive MISO/SIMO near-field links.
//!
//! The crate models a uniform linear array of loaded Hertzian dipoles facing a
//! single-antenna endpoint, assembles the combined network blocks, and
//! evaluates when receiver-to-transmitter coupling is negligible (the
//! unilateral approximation): the inter-array side `‖z‖²/|Z_RL|` against the
//! intra-array side `‖Z_GT‖_F`, its `sqrt(N)`-row lower bound, and the
//! Poisson-summation asymptote for fixed-spacing arrays.
//!
//! All numerics are generic over the floating-point scalar through
//! [`Scalar`]; `f64` is the working default used by the CLI and the aliases
//! below.

// Input validation writes `!(x > 0)` rather than `x <= 0` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod multiport;
pub mod output;
pub mod region;
pub mod scalar;
pub mod selfcheck;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex value over scalar `T` (ohms wherever it denotes an impedance).
pub type C<T> = num_complex::Complex<T>;

/// Double-precision complex impedance, the working default.
pub type C64 = C<f64>;

/// Single-precision complex impedance.
pub type C32 = C<f32>;

/// Double-precision dense matrix.
pub type Matrix64 = linalg::Matrix<f64>;

/// Double-precision sweep configuration.
pub type ScenarioConfig64 = sweep::ScenarioConfig<f64>;

/// Double-precision per-point report.
pub type CouplingReport64 = criteria::CouplingReport<f64>;
