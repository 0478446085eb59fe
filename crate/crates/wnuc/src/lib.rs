//! Weighted nuclear-norm recovery of low-rank matrices from Gaussian
//! measurements when estimates of the column and row spaces are available.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: SVD wrapper, seeded Gaussian ensembles, Marchenko–Pastur
//!   quadrature and the scalar shrinkage helpers.
//! * [`geometry`]: prior subspaces with prescribed principal angles and the
//!   adapted orthonormal bases `B_L`, `B_R`.
//! * [`weighting`]: the block-weighted operator `h_w`, its factorisation and
//!   the support projectors of `h_w(X)`.
//! * [`sdim`]: closed-form thresholds and a Monte-Carlo statistical-dimension
//!   estimator.
//! * [`optweights`]: golden-section search and the coordinate-descent weight
//!   optimiser.
//! * [`recovery`]: measurement ensembles and the splitting solver.

pub mod error;
pub mod geometry;
pub mod numerics;
pub mod optweights;
pub mod recovery;
pub mod sdim;
pub mod weighting;

pub use error::{Error, Result};
pub use numerics::Matrix;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
