use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, CvParams, FoldAssignment};
use super::metrics::r2_score;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::FeatureSubset;
use crate::models::{fit_gbt_view, GbtParams, Presorted};

/// A subset together with its cross-validated score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredNode {
    pub subset: FeatureSubset,
    pub score: f64,
    /// Model fits spent producing this score; zero when it came from a cache.
    pub eval_cost: u64,
}

/// Anything that maps subsets of a fixed feature set to scores.
///
/// Implementations must be pure: the same subset always gets the same score.
pub trait SubsetScorer: Sync {
    fn n_features(&self) -> usize;

    fn score(&self, subset: &FeatureSubset) -> Result<f64>;

    /// Model fits performed by one call to [`SubsetScorer::score`].
    fn fits_per_evaluation(&self) -> u64 {
        0
    }
}

/// Wraps a plain function as a scorer; used for synthetic score landscapes.
pub struct FnScorer<F> {
    m: usize,
    f: F,
}

impl<F> FnScorer<F>
where
    F: Fn(&FeatureSubset) -> f64 + Sync,
{
    pub fn new(m: usize, f: F) -> Self {
        Self { m, f }
    }
}

impl<F> SubsetScorer for FnScorer<F>
where
    F: Fn(&FeatureSubset) -> f64 + Sync,
{
    fn n_features(&self) -> usize {
        self.m
    }

    fn score(&self, subset: &FeatureSubset) -> Result<f64> {
        Ok((self.f)(subset))
    }
}

struct PreparedFold {
    repeat: usize,
    test: Vec<usize>,
    y_train: Vec<f64>,
    columns: Presorted,
}

/// Repeated stratified k-fold r² of a GBT model restricted to a subset.
///
/// Fold assignments are drawn once at construction, so every subset scored by
/// one scorer is compared on the same splits. Held-out predictions of one
/// repeat are pooled over its folds before computing r²; the score is the
/// mean over repeats.
pub struct CvScorer<'d> {
    dataset: &'d Dataset,
    gbt: GbtParams,
    cv: CvParams,
    assignments: Arc<[FoldAssignment]>,
    folds: Arc<[PreparedFold]>,
}

impl<'d> CvScorer<'d> {
    pub fn new(dataset: &'d Dataset, gbt: GbtParams, cv: CvParams) -> Result<Self> {
        gbt.validate()?;
        cv.validate()?;
        let y = dataset.y();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        if y.len() < 2 || y.iter().all(|v| *v == mean) {
            return Err(Error::DegenerateTarget);
        }
        let assignments = stratified_kfold(y, &cv)?;
        let x = dataset.x();
        let mut folds = Vec::with_capacity(cv.k * cv.repeats);
        for (repeat, a) in assignments.iter().enumerate() {
            for f in 0..cv.k {
                let (train, test) = a.split(f);
                let columns = (0..x.cols())
                    .map(|j| train.iter().map(|&i| x.get(i, j)).collect())
                    .collect();
                folds.push(PreparedFold {
                    repeat,
                    y_train: train.iter().map(|&i| y[i]).collect(),
                    columns: Presorted::from_columns(train.len(), columns),
                    test,
                });
            }
        }
        Ok(Self {
            dataset,
            gbt,
            cv,
            assignments: assignments.into(),
            folds: folds.into(),
        })
    }

    pub fn gbt(&self) -> &GbtParams {
        &self.gbt
    }

    pub fn cv(&self) -> &CvParams {
        &self.cv
    }

    pub fn assignments(&self) -> &[FoldAssignment] {
        &self.assignments
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    /// Same folds, different model parameters.
    pub fn with_gbt(&self, gbt: GbtParams) -> Result<CvScorer<'d>> {
        gbt.validate()?;
        Ok(CvScorer {
            dataset: self.dataset,
            gbt,
            cv: self.cv,
            assignments: Arc::clone(&self.assignments),
            folds: Arc::clone(&self.folds),
        })
    }

    /// Pooled held-out predictions, one vector per repeat, indexed by row.
    pub fn held_out_predictions(&self, subset: &FeatureSubset) -> Result<Vec<Vec<f64>>> {
        self.held_out_with(subset, &self.gbt)
    }

    fn held_out_with(&self, subset: &FeatureSubset, gbt: &GbtParams) -> Result<Vec<Vec<f64>>> {
        if subset.width() != self.dataset.n_features() {
            return Err(Error::domain(format!(
                "subset has width {}, dataset has {} features",
                subset.width(),
                self.dataset.n_features()
            )));
        }
        let features = subset.indices();
        let x = self.dataset.x();
        let mut pooled = vec![vec![f64::NAN; self.dataset.n_samples()]; self.cv.repeats];
        let mut row = vec![0.0; features.len()];
        for fold in self.folds.iter() {
            let view = fold.columns.view(&features);
            let model = fit_gbt_view(&view, &fold.y_train, gbt)?.model;
            for &i in &fold.test {
                let src = x.row(i);
                for (dst, &j) in row.iter_mut().zip(&features) {
                    *dst = src[j];
                }
                pooled[fold.repeat][i] = model.predict_row(&row);
            }
        }
        Ok(pooled)
    }

    pub fn score_with(&self, subset: &FeatureSubset, gbt: &GbtParams) -> Result<f64> {
        let pooled = self.held_out_with(subset, gbt)?;
        let y = self.dataset.y();
        let mut total = 0.0;
        for p in &pooled {
            total += r2_score(y, p)?;
        }
        Ok(total / pooled.len() as f64)
    }
}

impl SubsetScorer for CvScorer<'_> {
    fn n_features(&self) -> usize {
        self.dataset.n_features()
    }

    fn score(&self, subset: &FeatureSubset) -> Result<f64> {
        self.score_with(subset, &self.gbt)
    }

    fn fits_per_evaluation(&self) -> u64 {
        self.cv.fits_per_evaluation()
    }
}

/// Scores one subset from scratch. Searches should build a [`CvScorer`] once
/// instead; this redraws the folds on every call.
pub fn score_subset(dataset: &Dataset, subset: &FeatureSubset, gbt: &GbtParams, cv: &CvParams) -> Result<ScoredNode> {
    let scorer = CvScorer::new(dataset, *gbt, *cv)?;
    Ok(ScoredNode {
        subset: subset.clone(),
        score: scorer.score(subset)?,
        eval_cost: scorer.fits_per_evaluation(),
    })
}

impl CvScorer<'_> {
    /// Best tree depth over `depths`, scored on the full feature set with
    /// this scorer's folds. Scores within 1e-12 of each other tie, and ties
    /// go to the smaller depth.
    pub fn best_depth(&self, depths: &[usize]) -> Result<(usize, f64)> {
        self.best_depth_for(&FeatureSubset::full(self.n_features())?, depths)
    }

    /// [`CvScorer::best_depth`] for one subset.
    pub fn best_depth_for(&self, subset: &FeatureSubset, depths: &[usize]) -> Result<(usize, f64)> {
        let mut sorted = depths.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::domain("depth grid is empty"));
        }
        let mut best: Option<(usize, f64)> = None;
        for d in sorted {
            let params = GbtParams {
                max_depth: d,
                ..self.gbt
            };
            let s = self.score_with(subset, &params)?;
            if best.is_none_or(|(_, b)| s > b + 1e-12) {
                best = Some((d, s));
            }
        }
        Ok(best.expect("non-empty grid"))
    }
}

/// Scores each subset at its own best depth from a grid, so one evaluation
/// costs one CV run per depth.
pub struct DepthGridScorer<'s, 'd> {
    inner: &'s CvScorer<'d>,
    depths: Vec<usize>,
}

impl<'s, 'd> DepthGridScorer<'s, 'd> {
    pub fn new(inner: &'s CvScorer<'d>, depths: &[usize]) -> Result<Self> {
        let mut depths = depths.to_vec();
        depths.sort_unstable();
        depths.dedup();
        if depths.is_empty() {
            return Err(Error::domain("depth grid is empty"));
        }
        for &d in &depths {
            GbtParams {
                max_depth: d,
                ..inner.gbt
            }
            .validate()?;
        }
        Ok(Self { inner, depths })
    }

    pub fn depths(&self) -> &[usize] {
        &self.depths
    }

    /// The depth a subset is scored at.
    pub fn depth_for(&self, subset: &FeatureSubset) -> Result<usize> {
        Ok(self.inner.best_depth_for(subset, &self.depths)?.0)
    }
}

impl SubsetScorer for DepthGridScorer<'_, '_> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn score(&self, subset: &FeatureSubset) -> Result<f64> {
        Ok(self.inner.best_depth_for(subset, &self.depths)?.1)
    }

    fn fits_per_evaluation(&self) -> u64 {
        self.depths.len() as u64 * self.inner.fits_per_evaluation()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{synth_dataset, Effect, SynthSpec};

    fn data() -> Dataset {
        synth_dataset(&SynthSpec {
            n: 50,
            m: 5,
            relevant: vec![0, 2],
            effect: Effect::Linear,
            noise_sd: 0.3,
            seed: 9,
        })
        .unwrap()
    }

    #[test]
    fn depth_grid_scores_the_max_over_depths() {
        let ds = data();
        let gbt = GbtParams {
            n_trees: 10,
            ..Default::default()
        };
        let cv = CvParams {
            repeats: 1,
            ..Default::default()
        };
        let base = CvScorer::new(&ds, gbt, cv).unwrap();
        let grid = DepthGridScorer::new(&base, &[3, 1, 2, 3]).unwrap();
        assert_eq!(grid.depths(), [1, 2, 3]);
        assert_eq!(grid.fits_per_evaluation(), 3 * 5);
        let s = "10100".parse::<FeatureSubset>().unwrap();
        let by_depth: Vec<f64> = (1..=3)
            .map(|d| base.score_with(&s, &GbtParams { max_depth: d, ..gbt }).unwrap())
            .collect();
        let max = by_depth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(grid.score(&s).unwrap(), max);
        let d = grid.depth_for(&s).unwrap();
        assert_eq!(by_depth[d - 1], max);
        assert!(DepthGridScorer::new(&base, &[]).is_err());
    }
}
