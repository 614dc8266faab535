//! Mean-field spike-and-slab variational Bayes for sparse linear regression.
//!
//! The prior places a point mass at zero and a Laplace slab on each
//! coefficient; the variational family is a product of Gaussian/Dirac
//! mixtures. [`cavi::cavi_fit`] is the main engine; [`variants`] holds the
//! hard-support and Gaussian-slab alternatives used for comparison.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod bench;
pub mod cavi;
pub mod data;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod noise;
pub mod scalar;
pub mod special;
pub mod variants;

pub use cavi::{cavi_fit, negative_elbo, FitConfig, FitSummary, UpdateOrder};
pub use engine::Engine;
pub use data::{posterior_mean, ridge_init, PriorConfig, RegressionData, Slab, VariationalState};
pub use error::{Result, VbError};
pub use variants::{gauss_batchwise_fit, gauss_componentwise_fit, qmf_fit, VariantKind};
