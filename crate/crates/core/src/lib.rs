//! Probabilistic value selection for tabular data.
//!
//! Value selection removes individual cell values (a feature value inside an
//! instance) instead of whole rows or columns. Values whose class distribution
//! is confusing are removed with a probability driven by their conditional
//! entropy or normalized information gain, which shrinks the models trained on
//! the filtered data while keeping most of their accuracy.
//!
//! The crate is organised as a pipeline:
//!
//! * [`data`]: in-memory dataset, CSV and ARFF ingestion/serialization.
//! * [`discretize`]: equal-width, equal-frequency and MDL discretization.
//! * [`metrics`]: per-value entropy, information gain and removal probability.
//! * [`selection`]: the PVS and P⁺VS filters.
//! * [`baselines`]: reservoir sampling, misclassified-instance filtering and
//!   column/random-value controls.
//! * [`tree`], [`rules`], [`learner`]: compact classifiers with a model size.
//! * [`eval`]: stratified cross-validation, MR/AR/harmonic mean, experiments.
//! * [`cli`]: the `valsel` command-line front end.
//!
//! Scalar-valued statistics are generic over [`Scalar`]; the aliases at the
//! crate root fix them to `f64`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod data;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod learner;
pub mod metrics;
pub mod rules;
pub mod scalar;
pub mod selection;
pub mod tree;

pub use data::{Dataset, Feature, FeatureKind, Instance, Slot};
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Per-value statistics in double precision.
pub type ValueStats = metrics::ValueStats<f64>;
/// Per-value statistics in single precision.
pub type ValueStats32 = metrics::ValueStats<f32>;
/// Metric table in double precision.
pub type MetricTable = metrics::MetricTable<f64>;
/// Metric table in single precision.
pub type MetricTable32 = metrics::MetricTable<f32>;
/// Filter outcome carrying double-precision statistics.
pub type FilterOutcome = selection::FilterOutcome<f64>;
