//! Subset scoring by repeated stratified cross-validation, plus the
//! correlation statistics reported next to it.

mod cache;
mod folds;
mod metrics;
mod scorer;

pub use cache::{cache_get_or_score, ScoreCache};
pub use folds::{stratified_kfold, stratify_bins, CvParams, FoldAssignment};
pub use metrics::{correlation_p_value, inc_beta, ln_gamma, pearson, r2_score, student_t_two_sided, Correlation};
pub use scorer::{score_subset, CvScorer, DepthGridScorer, FnScorer, ScoredNode, SubsetScorer};
