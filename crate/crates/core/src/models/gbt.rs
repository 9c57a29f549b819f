//! Least-squares gradient boosting over depth-limited regression trees.

use serde::{Deserialize, Serialize};

use super::tree::{Presorted, TrainView, TreeGrower, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Reserved for stochastic variants; fitting is currently deterministic.
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::domain("n_trees must be at least 1"));
        }
        if !(1..=16).contains(&self.max_depth) {
            return Err(Error::domain(format!(
                "max_depth must be in [1, 16], got {}",
                self.max_depth
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::domain(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::domain("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub format_version: u32,
    pub n_features: usize,
    pub base_prediction: f64,
    pub trees: Vec<TreeNode>,
    pub params: GbtParams,
}

/// A fitted model plus the training-set predictions tracked while boosting.
#[derive(Debug, Clone)]
pub struct GbtFit {
    pub model: GbtModel,
    pub train_predictions: Vec<f64>,
    /// Training MSE before any tree (index 0) and after each tree.
    pub train_mse: Vec<f64>,
}

impl GbtModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let lr = self.params.learning_rate;
        self.base_prediction + lr * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::domain(format!(
                "model expects {} columns, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: GbtModel = serde_json::from_str(s)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::domain(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        if model
            .trees
            .iter()
            .filter_map(TreeNode::max_feature)
            .any(|f| f >= model.n_features)
        {
            return Err(Error::domain("tree references a feature beyond n_features"));
        }
        Ok(model)
    }
}

pub fn predict(model: &GbtModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}

/// Fits a boosted ensemble on a matrix.
pub fn fit_gbt(x: &Matrix, y: &[f64], params: &GbtParams) -> Result<GbtModel> {
    if y.len() != x.rows() {
        return Err(Error::domain(format!("{} targets for {} rows", y.len(), x.rows())));
    }
    let pre = Presorted::from_matrix(x);
    Ok(fit_gbt_view(&pre.view_all(), y, params)?.model)
}

/// Fits on presorted columns. `view` may have zero columns, in which case the
/// model is the constant training mean.
pub fn fit_gbt_view(view: &TrainView<'_>, y: &[f64], params: &GbtParams) -> Result<GbtFit> {
    params.validate()?;
    let n = view.rows();
    if y.len() != n {
        return Err(Error::domain(format!("{} targets for {n} rows", y.len())));
    }
    if n == 0 {
        return Err(Error::domain("cannot fit on zero rows"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("targets must be finite"));
    }
    if n < 2 * params.min_samples_leaf {
        return Err(Error::domain(format!(
            "{n} rows cannot hold two leaves of {}",
            params.min_samples_leaf
        )));
    }

    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut residual: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mse = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut train_mse = vec![mse(&residual)];
    let mut trees = Vec::with_capacity(params.n_trees);

    if view.cols() > 0 {
        let lr = params.learning_rate;
        let mut grower = TreeGrower::new(view, params.max_depth, params.min_samples_leaf);
        for _ in 0..params.n_trees {
            let tree = grower.grow(&residual, &mut |row, value| {
                pred[row] += lr * value;
            });
            for ((r, p), t) in residual.iter_mut().zip(&pred).zip(y) {
                *r = t - p;
            }
            train_mse.push(mse(&residual));
            let stalled = tree.is_leaf();
            trees.push(tree);
            // a lone leaf means no split helps; every later tree would match it
            if stalled {
                break;
            }
        }
    }

    Ok(GbtFit {
        model: GbtModel {
            format_version: MODEL_FORMAT_VERSION,
            n_features: view.cols(),
            base_prediction: base,
            trees,
            params: *params,
        },
        train_predictions: pred,
        train_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, n: usize, m: usize) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::new(n, m, (0..n * m).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let y = (0..n)
            .map(|i| x.get(i, 0).sin() + 0.5 * x.get(i, m - 1) * x.get(i, 0) + rng.random_range(-0.3..0.3))
            .collect();
        (x, y)
    }

    #[test]
    fn constant_target_is_exact() {
        let (x, _) = random_problem(1, 20, 3);
        let y = vec![4.25; 20];
        let model = fit_gbt(&x, &y, &GbtParams::default()).unwrap();
        assert_eq!(model.base_prediction, 4.25);
        assert!(model.trees.iter().all(|t| *t == TreeNode::Leaf { value: 0.0 }));
        assert!(model.predict(&x).unwrap().iter().all(|&p| p == 4.25));
    }

    #[test]
    fn identity_target_fits_to_zero_error() {
        let x = Matrix::from_rows(&(0..16).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..16).map(f64::from).collect();
        let params = GbtParams {
            n_trees: 50,
            max_depth: 4,
            learning_rate: 1.0,
            ..Default::default()
        };
        let model = fit_gbt(&x, &y, &params).unwrap();
        let pred = model.predict(&x).unwrap();
        let mse = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / 16.0;
        assert!(mse < 1e-6, "mse {mse}");
    }

    #[test]
    fn training_mse_is_monotone() {
        for seed in 0..5 {
            let (x, y) = random_problem(seed, 60, 4);
            let pre = Presorted::from_matrix(&x);
            let fit = fit_gbt_view(&pre.view_all(), &y, &GbtParams::default()).unwrap();
            for w in fit.train_mse.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * fit.train_mse[0]);
            }
        }
    }

    #[test]
    fn incremental_predictions_match_predict() {
        let (x, y) = random_problem(7, 50, 5);
        let pre = Presorted::from_matrix(&x);
        let fit = fit_gbt_view(&pre.view_all(), &y, &GbtParams::default()).unwrap();
        let direct = fit.model.predict(&x).unwrap();
        for (a, b) in direct.iter().zip(&fit.train_predictions) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn no_trees_predicts_base() {
        let model = GbtModel {
            format_version: MODEL_FORMAT_VERSION,
            n_features: 2,
            base_prediction: 1.5,
            trees: vec![],
            params: GbtParams::default(),
        };
        let x = Matrix::from_rows(&[[0.0, 1.0], [3.0, 4.0]]).unwrap();
        assert_eq!(predict(&model, &x).unwrap(), [1.5, 1.5]);
        assert!(model.predict(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn stump_with_unit_rate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let params = GbtParams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            ..Default::default()
        };
        let model = fit_gbt(&x, &[0.0, 1.0], &params).unwrap();
        assert_eq!(model.predict(&x).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn zero_columns_is_the_mean() {
        let pre = Presorted::from_columns(4, vec![]);
        let fit = fit_gbt_view(&pre.view_all(), &[1.0, 2.0, 3.0, 6.0], &GbtParams::default()).unwrap();
        assert!(fit.model.trees.is_empty());
        assert_eq!(fit.model.base_prediction, 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(fit_gbt(&x, &[0.0, f64::NAN], &GbtParams::default()).is_err());
        let bad = GbtParams {
            max_depth: 17,
            ..Default::default()
        };
        assert!(fit_gbt(&x, &[0.0, 1.0], &bad).is_err());
        let bad = GbtParams {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(fit_gbt(&x, &[0.0, 1.0], &bad).is_err());
    }

    #[test]
    fn deterministic_and_row_order_invariant() {
        let (x, y) = random_problem(3, 40, 3);
        let a = fit_gbt(&x, &y, &GbtParams::default()).unwrap();
        let b = fit_gbt(&x, &y, &GbtParams::default()).unwrap();
        assert_eq!(a, b);

        let rev: Vec<usize> = (0..40).rev().collect();
        let xr = x.select(&rev, &[0, 1, 2]);
        let p = a.predict(&x).unwrap();
        let pr = a.predict(&xr).unwrap();
        for (i, &r) in rev.iter().enumerate() {
            assert_eq!(pr[i], p[r]);
        }
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = random_problem(11, 30, 2);
        let model = fit_gbt(
            &x,
            &y,
            &GbtParams {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let back = GbtModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);

        let mut wrong = model.clone();
        wrong.format_version = 99;
        assert!(GbtModel::from_json(&wrong.to_json().unwrap()).is_err());
    }

    #[test]
    fn depth_d_tree_reproduces_evenly_spaced_linear_targets() {
        // 2^d distinct rows, one tree, unit rate. Greedy CART only guarantees
        // this when the best first split halves the rows, as it does here.
        for d in 1..=5 {
            let n = 1usize << d;
            let x = Matrix::from_rows(&(0..n).map(|i| [i as f64 * 0.5]).collect::<Vec<_>>()).unwrap();
            let y: Vec<f64> = (0..n).map(|i| 3.0 - 1.25 * i as f64).collect();
            let params = GbtParams {
                n_trees: 1,
                max_depth: d,
                learning_rate: 1.0,
                ..Default::default()
            };
            let pred = fit_gbt(&x, &y, &params).unwrap().predict(&x).unwrap();
            for (p, t) in pred.iter().zip(&y) {
                assert!((p - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn greedy_tree_need_not_isolate_arbitrary_targets() {
        // alternating targets: the first greedy split is 1|3, leaving three
        // rows for a single remaining level
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [0.0, 1.0, 0.0, 1.0];
        let params = GbtParams {
            n_trees: 1,
            max_depth: 2,
            learning_rate: 1.0,
            ..Default::default()
        };
        let pred = fit_gbt(&x, &y, &params).unwrap().predict(&x).unwrap();
        let sse: f64 = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum();
        assert!((sse - 0.5).abs() < 1e-12);
    }
}
