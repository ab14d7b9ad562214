//! Statistical inference for the demographic parity (DP) metric, the ratio
//! of the lowest to the highest group success rate.
//!
//! The exact min and max are not differentiable at ties, so the pipeline
//! estimates smooth (LogSumExp) extremes instead, propagates the group-level
//! CLT covariance through them with the delta method, and keeps the
//! sharpness parameter below sqrt(N) so normal inference stays valid even
//! when group rates coincide. A seeded Monte Carlo lab checks the resulting
//! distributional claims.

pub mod censored;
pub mod crossfit;
pub mod data_model;
pub mod error;
pub mod inference;
pub mod normal;
pub mod propagation;
pub mod report;
pub mod simlab;
pub mod smoothing;
pub mod stats;

pub use error::{DpError, Result};
pub use propagation::{DpEstimate, SmoothingConfig};
pub use smoothing::Alpha;
