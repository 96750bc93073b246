//! Elastic-net selection-frequency feature ranking followed by incremental
//! linear-SVM feature selection.
//!
//! The crate is organized bottom-up:
//!
//! - [`dataset`]: CSV ingestion, z-score scaling, synthetic data.
//! - [`elasticnet`]: coordinate-descent elastic net with lambda path and CV.
//! - [`svm`]: linear SVM by dual coordinate ascent.
//! - [`metrics`]: AUC / ACC / SEN / SPE and repeated-run aggregation.
//! - [`pipeline`]: balanced splits, frequency ranking, baseline, and
//!   incremental selection.
//! - [`report`]: serialized run reports and text tables.
//! - [`textfmt`]: 17-significant-digit float output.

pub mod dataset;
pub mod elasticnet;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod svm;
pub mod textfmt;

pub use error::{Error, Result};
