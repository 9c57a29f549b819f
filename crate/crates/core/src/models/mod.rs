//! Gradient-boosted regression trees.

mod gbt;
mod tree;

pub use gbt::{fit_gbt, fit_gbt_view, predict, GbtFit, GbtModel, GbtParams, MODEL_FORMAT_VERSION};
pub use tree::{fit_tree, Presorted, TrainView, TreeNode};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::eval::{CvParams, CvScorer};

/// Picks the tree depth with the best cross-validated r² on all features.
/// Ties go to the smaller depth.
pub fn grid_search_depth(
    dataset: &Dataset,
    depths: &[usize],
    cv: &CvParams,
    params: &GbtParams,
) -> Result<(usize, f64)> {
    CvScorer::new(dataset, *params, *cv)?.best_depth(depths)
}
