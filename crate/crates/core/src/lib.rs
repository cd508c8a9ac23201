//! Chance-constrained optimization over probability measures.
//!
//! The crate solves problems of the form
//!
//! ```text
//!     minimize   E_mu[ J(x) ]
//!     over       probability measures mu on a box X
//!     subject to E_mu[ P(x) ] >= 1 - alpha,     P(x) = Pr{ hbar(x, xi) <= 0 }
//! ```
//!
//! where `hbar` is the max over a family of constraint functions driven by a
//! random vector `xi`. An optimal measure can always be chosen with at most
//! two support points, so the central object is a two-point mixture policy:
//! randomize between `x1` (weight `mu1`) and `x2` (weight `1 - mu1`).
//!
//! The probability `P` is approximated from a fixed sample set by a smoothed
//! indicator, which makes the whole problem a differentiable nonlinear
//! program solved by a multistart augmented-Lagrangian method. Deterministic
//! baselines (single-point solves, scenario enforcement, grid SAA) and
//! Monte-Carlo validation utilities round out the toolbox.

pub mod baselines;
pub mod nlp;
pub mod oracle;
pub mod problem;
pub mod quadrotor;
pub mod sampling;
pub mod smoothing;
pub mod solver;
pub mod special;
pub mod validate;

pub use problem::{
    ConstraintFamily, DecisionDomain, ProblemInstance, ScalarDistribution, UncertaintyModel,
};
pub use sampling::{sample_uncertainty, SampleSet};
pub use smoothing::SmoothingParams;
pub use solver::{Frontier, FrontierEntry, Policy, SPointPolicy, TwoPointPolicy};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
