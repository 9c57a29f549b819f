//! Dataset construction: group statistics, feature tables, synthetic data
//! and CSV ingestion.

mod io;
mod stats;
mod synth;
mod table;

pub use io::{load_csv, load_csv_with, save_csv, CsvOptions};
pub use stats::{region_stats, RegionStats, ENTROPY_BINS, STAT_NAMES};
pub use synth::{
    grid_feature_names, synth_dataset, synth_with_truth, Effect, SynthSpec, SyntheticTruth, METRICS, REGIONS,
};
pub use table::{build_feature_table, load_targets, GroupedSamples, SubjectSamples};
