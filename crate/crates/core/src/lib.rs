//! Wrapper feature selection over the lattice of feature subsets.
//!
//! Subsets are scored by repeated stratified cross-validation of a
//! gradient-boosted tree regressor and searched with greedy forward and
//! backward selection, a genetic algorithm, greedy best-first search, and
//! best-first search with a crossover jump between the two best children of
//! each expanded node.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod lattice;
pub mod matrix;
pub mod models;
pub mod search;

pub use dataset::{Dataset, DatasetMeta, FeatureTag};
pub use error::{Error, Result};
pub use lattice::FeatureSubset;
pub use matrix::Matrix;
