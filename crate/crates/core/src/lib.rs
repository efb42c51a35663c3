//! Physics-informed surrogates for broadband vehicle noise spectra: least-squares
//! and cross-validated fits, Bayesian models sampled with NUTS, convergence
//! diagnostics, PSIS-LOO model comparison and parametric bootstrap.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod loo;
pub mod models;
pub mod par;
pub mod sampler;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
