//! Conditional Gaussian dynamics of continuously monitored two-tone
//! optomechanical systems.
//!
//! The crate integrates the Riccati equation for the conditional covariance
//! matrix of one cavity mode coupled to one or two mechanical modes, with or
//! without the counter-rotating terms, and compares it with closed-form
//! steady states, adiabatic limits and a second-order Floquet expansion.

pub mod analytic;
pub mod entanglement;
pub mod error;
pub mod floquet;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod riccati;

pub use error::{Error, Result};
pub use gaussian::CovarianceMatrix;
pub use model::{MeasurementSpec, ModelMatrices, ThreeModeParams, TwoModeParams};
