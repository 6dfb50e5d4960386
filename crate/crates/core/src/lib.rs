//! Matrix-free primal-dual solver for structured saddle-point problems
//!
//! ```text
//! min_x max_y  f(x) + <x, A y> - g*(y),    A y = sum_i A_i y_i
//! ```
//!
//! solved by the proximal alternating predictor-corrector (PAPC) iteration,
//! together with the machinery to certify its Q-linear rate in the weighted
//! primal-dual norm and to bound the distance to the solution a posteriori.
//!
//! The crate is organized bottom-up:
//!
//! * [`linops`]: matrix-free operators (finite differences, PSF convolution)
//!   with power iteration and analytic spectra.
//! * [`prox`]: projections and conjugate proximal maps used by the dual step.
//! * [`functions`]: smooth objectives and the pointwise quadratic
//!   supportability certificate.
//! * [`papc`]: the iteration, parameter validation/tuning, the H-metric and
//!   convergence reports.
//! * [`problems`]: TV-L2 denoising and multiresolution (SMRE) problem builders.
//! * [`io`]: CSV/graymap/raw-float persistence and synthetic data.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod io;
pub mod linops;
pub mod papc;
pub mod problems;
pub mod prox;

pub(crate) mod vecops;

pub use error::{Error, Result};
pub use functions::SmoothObjective;
pub use linops::{LinearOperator, SpectralBounds};
pub use papc::{
    ConvergenceReport, DualBlock, HMetric, IterateState, SaddleProblem, SolverConfig, StopReason,
};
pub use prox::ProxableBlock;
