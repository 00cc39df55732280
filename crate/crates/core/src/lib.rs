//! Causal-mask regularized training for tabular classifiers.
//!
//! The pipeline learns a partial ancestral graph with FCI, reads off which
//! features are adjacent to the label with an arrowhead at the label, and
//! trains logistic regression or a small MLP while penalizing Grad x Input
//! attributions of the remaining features.

pub mod acr;
pub mod attribution;
pub mod bayesnet;
pub mod citest;
pub mod dataset;
pub mod error;
pub mod fci;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod synthgen;

pub use error::{CareError, Result};
