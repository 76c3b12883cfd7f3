//! Individual running-performance prediction by local low-rank matrix completion.
//!
//! The crate is organized around [`datamodel::PerformanceTable`], an athletes ×
//! events grid of optional performances:
//!
//! - [`ingest`] turns raw attempt exports into cleaned, collated tables;
//! - [`lmc`] predicts single entries from determinant circuits;
//! - [`baselines`] holds the comparison predictors;
//! - [`lowrank`] extracts components and per-athlete coefficients by SVD;
//! - [`eval`] runs leave-one-out validation and paired significance tests;
//! - [`synth`] generates low-rank synthetic populations;
//! - [`analysis`] computes fair-race distances, pivot curves and optimal events.

pub mod analysis;
pub mod baselines;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod lmc;
pub mod lowrank;
pub mod par;
pub mod predictor;
pub mod seed;
pub mod synth;

pub use datamodel::{EventCatalog, Parameterization, PerformanceTable};
pub use error::{Error, Result};
pub use predictor::{Method, Predictor};

