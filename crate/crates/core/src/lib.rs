//! Privacy-at-risk calibration for the Laplace mechanism.
//!
//! The crate quantifies how likely a Laplace mechanism calibrated at level
//! `eps0` is to satisfy the stronger level `eps`, from the randomness of the
//! noise alone (explicit case), of the data-generating process (implicit
//! case) or both (coupled case). On top of that it provides composition
//! bounds, a compensation-budget cost model and Monte Carlo cross-checks.

// `!(x > 0.0)` style guards deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composition;
pub mod cost;
pub mod error;
pub mod loss;
pub mod mechanism;
pub mod montecarlo;
pub mod risk;
pub mod rng;
pub mod roots;
pub mod sensitivity;
pub mod special;

pub use error::{Error, Result};
pub use loss::LossDistribution;
pub use risk::{Case, RiskAssessment};
