//! Embedding-level classification with uncertainty quantification.
//!
//! The pipeline ingests per-extractor feature tables, reduces each with PCA,
//! concatenates the reduced views, trains dropout MLPs (optionally with a
//! predictive-entropy regulariser) and scores MC-dropout, deep-ensemble and
//! ensemble-MC-dropout predictions with standard and uncertainty-aware metrics.

pub mod baselines;
pub mod data;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod nn;
pub mod pca;
pub mod runner;
pub mod seed;
pub mod uq;

pub use error::{Error, Result};
