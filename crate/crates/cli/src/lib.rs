//! Configuration, experiment running and reporting behind the `featsel`
//! command line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod frequency;

pub use config::{BudgetPolicy, DatasetSource, ExperimentConfig, Overrides, StrategySpec, SynthSource};
pub use error::{CliError, Result};
pub use experiment::{load_dataset, run_experiment, ComparisonReport, ComparisonRow, ExperimentResult, RowStatus};
pub use frequency::{tags_from_names, FrequencyReport, TagCount};
