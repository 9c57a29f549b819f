//! Least-squares CART regression trees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A fitted regression tree. Internal nodes send `x` left iff
/// `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Largest feature index referenced by any split.
    pub(crate) fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => Some(
                [Some(*feature), left.max_feature(), right.max_feature()]
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(*feature),
            ),
        }
    }
}

/// Column-major training columns together with each column's row order
/// sorted by value. Sorting is the dominant setup cost, so callers that fit
/// many models on the same rows build this once and borrow columns from it.
#[derive(Debug, Clone)]
pub struct Presorted {
    n: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn from_matrix(x: &Matrix) -> Self {
        let cols = (0..x.cols()).map(|j| x.column(j)).collect();
        Self::from_columns(x.rows(), cols)
    }

    pub fn from_columns(n: usize, cols: Vec<Vec<f64>>) -> Self {
        let order = cols
            .iter()
            .map(|c| {
                debug_assert_eq!(c.len(), n);
                let mut idx: Vec<u32> = (0..n as u32).collect();
                // stable: equal values keep row order
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
                idx
            })
            .collect();
        Self { n, cols, order }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn view(&self, features: &[usize]) -> TrainView<'_> {
        TrainView {
            n: self.n,
            cols: features.iter().map(|&j| self.cols[j].as_slice()).collect(),
            order: features.iter().map(|&j| self.order[j].as_slice()).collect(),
        }
    }

    pub fn view_all(&self) -> TrainView<'_> {
        let all: Vec<usize> = (0..self.cols()).collect();
        self.view(&all)
    }
}

/// Borrowed training columns for one fit; column `k` of the view becomes
/// feature `k` of the fitted trees.
#[derive(Debug, Clone)]
pub struct TrainView<'a> {
    pub(crate) n: usize,
    pub(crate) cols: Vec<&'a [f64]>,
    pub(crate) order: Vec<&'a [u32]>,
}

impl TrainView<'_> {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }
}

/// Reusable buffers for growing trees on one view.
pub(crate) struct TreeGrower<'v, 'a> {
    view: &'v TrainView<'a>,
    max_depth: usize,
    min_leaf: usize,
    work: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    goes_left: Vec<bool>,
    /// `inv[i] = 1 / i`, so the split scan multiplies instead of dividing.
    inv: Vec<f64>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl<'v, 'a> TreeGrower<'v, 'a> {
    pub(crate) fn new(view: &'v TrainView<'a>, max_depth: usize, min_leaf: usize) -> Self {
        Self {
            view,
            max_depth,
            min_leaf: min_leaf.max(1),
            work: view.order.iter().map(|o| o.to_vec()).collect(),
            scratch: Vec::with_capacity(view.n),
            goes_left: vec![false; view.n],
            inv: (0..=view.n)
                .map(|i| if i == 0 { 0.0 } else { 1.0 / i as f64 })
                .collect(),
        }
    }

    /// Grows one tree on `target`; `on_leaf(row, value)` is called for every
    /// training row with the value of the leaf it lands in.
    pub(crate) fn grow(&mut self, target: &[f64], on_leaf: &mut dyn FnMut(usize, f64)) -> TreeNode {
        for (w, o) in self.work.iter_mut().zip(&self.view.order) {
            w.copy_from_slice(o);
        }
        let n = self.view.n;
        if self.work.is_empty() {
            // no columns: the best tree is the mean
            let value = target.iter().sum::<f64>() / n as f64;
            (0..n).for_each(|r| on_leaf(r, value));
            return TreeNode::Leaf { value };
        }
        self.build(target, 0, n, 0, on_leaf)
    }

    fn build(
        &mut self,
        target: &[f64],
        lo: usize,
        hi: usize,
        depth: usize,
        on_leaf: &mut dyn FnMut(usize, f64),
    ) -> TreeNode {
        let count = hi - lo;
        let rows = &self.work[0][lo..hi];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &r in rows {
            let t = target[r as usize];
            sum += t;
            sumsq += t * t;
        }

        let split = if depth < self.max_depth && count >= 2 * self.min_leaf {
            self.best_split(target, lo, hi, sum, sumsq)
        } else {
            None
        };

        let Some(split) = split else {
            let value = sum / count as f64;
            for &r in &self.work[0][lo..hi] {
                on_leaf(r as usize, value);
            }
            return TreeNode::Leaf { value };
        };

        let mid = lo + split.n_left;
        let (left, right) = if depth + 1 == self.max_depth {
            // both children are leaves; the split feature's order already
            // lists the left rows first
            let rows = &self.work[split.feature];
            (
                leaf(target, &rows[lo..mid], on_leaf),
                leaf(target, &rows[mid..hi], on_leaf),
            )
        } else {
            let col = self.view.cols[split.feature];
            for &r in &self.work[split.feature][lo..hi] {
                self.goes_left[r as usize] = col[r as usize] <= split.threshold;
            }
            for w in self.work.iter_mut() {
                stable_partition(&mut w[lo..hi], &self.goes_left, &mut self.scratch);
            }
            (
                self.build(target, lo, mid, depth + 1, on_leaf),
                self.build(target, mid, hi, depth + 1, on_leaf),
            )
        };
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(&self, target: &[f64], lo: usize, hi: usize, sum: f64, sumsq: f64) -> Option<BestSplit> {
        let count = hi - lo;
        let min_leaf = self.min_leaf;
        let inv = &self.inv;
        let parent = sum * sum / count as f64;
        // gains at or below rounding noise of the node's sum of squares do not count
        let tol = 1e-12 * sumsq;
        let mut best: Option<BestSplit> = None;

        if count < 2 * min_leaf {
            return None;
        }
        // candidate split points: i rows go left, min_leaf <= i <= count - min_leaf
        let (first, last) = (min_leaf, count - min_leaf);
        let inv_left = &inv[first..=last];
        let inv_right = &inv[count - last..=count - first];

        for (f, order) in self.work.iter().enumerate() {
            let col = self.view.cols[f];
            let rows = &order[lo..hi];
            let mut left_sum: f64 = rows[..first - 1].iter().map(|&r| target[r as usize]).sum();
            let mut bar = best.as_ref().map_or(tol, |b| b.gain);
            let pairs = rows[first - 1..=last].windows(2);
            for (k, ((w, &il), &ir)) in pairs.zip(inv_left).zip(inv_right.iter().rev()).enumerate() {
                left_sum += target[w[0] as usize];
                let lower = col[w[0] as usize];
                let cur = col[w[1] as usize];
                if cur <= lower {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum * il + right_sum * right_sum * ir - parent;
                if gain > bar {
                    bar = gain;
                    let mut threshold = 0.5 * (lower + cur);
                    if threshold >= cur {
                        threshold = lower;
                    }
                    best = Some(BestSplit {
                        gain,
                        feature: f,
                        threshold,
                        n_left: first + k,
                    });
                }
            }
        }
        best
    }
}

fn leaf(target: &[f64], rows: &[u32], on_leaf: &mut dyn FnMut(usize, f64)) -> TreeNode {
    let value = rows.iter().map(|&r| target[r as usize]).sum::<f64>() / rows.len() as f64;
    for &r in rows {
        on_leaf(r as usize, value);
    }
    TreeNode::Leaf { value }
}

fn stable_partition(slice: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    // branch-free: every row is written to both sides, only one cursor moves
    scratch.resize(slice.len(), 0);
    let (mut w, mut k) = (0, 0);
    for i in 0..slice.len() {
        let r = slice[i];
        let left = goes_left[r as usize];
        slice[w] = r;
        scratch[k] = r;
        w += usize::from(left);
        k += usize::from(!left);
    }
    slice[w..].copy_from_slice(&scratch[..k]);
}

/// Fits one least-squares regression tree to `residuals`.
///
/// Splits are searched over every feature at midpoints between consecutive
/// distinct sorted values; equal gains keep the lowest feature index, then the
/// lowest threshold.
pub fn fit_tree(x: &Matrix, residuals: &[f64], max_depth: usize, min_samples_leaf: usize) -> Result<TreeNode> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::domain("cannot fit a tree on an empty matrix"));
    }
    if residuals.len() != x.rows() {
        return Err(Error::domain(format!(
            "{} residuals for {} rows",
            residuals.len(),
            x.rows()
        )));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::domain("residuals must be finite"));
    }
    let min_leaf = min_samples_leaf.max(1);
    if x.rows() < 2 * min_leaf {
        return Err(Error::domain(format!(
            "{} rows cannot hold two leaves of {min_leaf}",
            x.rows()
        )));
    }
    let pre = Presorted::from_matrix(x);
    let view = pre.view_all();
    let mut grower = TreeGrower::new(&view, max_depth, min_leaf);
    Ok(grower.grow(residuals, &mut |_, _| {}))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sse_of(tree: &TreeNode, x: &Matrix, y: &[f64]) -> f64 {
        (0..x.rows()).map(|i| (tree.predict_row(x.row(i)) - y[i]).powi(2)).sum()
    }

    #[test]
    fn two_point_stump() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let t = fit_tree(&x, &[0.0, 1.0], 1, 1).unwrap();
        match &t {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
                assert_eq!(**left, TreeNode::Leaf { value: 0.0 });
                assert_eq!(**right, TreeNode::Leaf { value: 1.0 });
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn constant_residuals_give_a_leaf() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [1.0, 4.0], [2.0, 3.0], [3.0, 9.0]]).unwrap();
        let t = fit_tree(&x, &[0.7; 4], 4, 1).unwrap();
        assert_eq!(t, TreeNode::Leaf { value: 0.7 });
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let x = Matrix::zeros(0, 1);
        assert!(fit_tree(&x, &[], 2, 1).is_err());
        let x = Matrix::zeros(3, 0);
        assert!(fit_tree(&x, &[1.0, 2.0, 3.0], 2, 1).is_err());
    }

    #[test]
    fn unsplittable_feature_is_skipped() {
        // column 0 is constant; the split must use column 1
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]).unwrap();
        let t = fit_tree(&x, &[0.0, 0.0, 1.0, 1.0], 1, 1).unwrap();
        assert!(matches!(t, TreeNode::Split { feature: 1, threshold, .. } if threshold == 1.5));
    }

    #[test]
    fn equal_gain_prefers_lowest_feature() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let t = fit_tree(&x, &[0.0, 1.0], 1, 1).unwrap();
        assert!(matches!(t, TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
        let y = [10.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let t = fit_tree(&x, &y, 3, 2).unwrap();
        fn leaves_ok(t: &TreeNode, x: &Matrix, rows: Vec<usize>, min: usize) {
            match t {
                TreeNode::Leaf { .. } => assert!(rows.len() >= min),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r): (Vec<_>, Vec<_>) = rows.iter().partition(|&&i| x.get(i, *feature) <= *threshold);
                    leaves_ok(left, x, l, min);
                    leaves_ok(right, x, r, min);
                }
            }
        }
        leaves_ok(&t, &x, (0..6).collect(), 2);
    }

    #[test]
    fn depth_bound_and_deeper_fits_better() {
        let x = Matrix::from_rows(&(0..8).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..8).map(|i| ((i * 37) % 11) as f64).collect();
        let mut last = f64::INFINITY;
        for d in 1..=4 {
            let t = fit_tree(&x, &y, d, 1).unwrap();
            assert!(t.depth() <= d);
            let sse = sse_of(&t, &x, &y);
            assert!(sse <= last + 1e-12);
            last = sse;
        }
    }

    // Brute-force CART: at every node try every admissible split (and no
    // split), recursing to the depth limit, and keep the minimum SSE.
    fn brute_min_sse(x: &[f64], y: &[f64], rows: &[usize], depth: usize) -> f64 {
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
        let leaf = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum::<f64>();
        if depth == 0 || rows.len() < 2 {
            return leaf;
        }
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[r]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let mut best = leaf;
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i] <= thr);
            best = best.min(brute_min_sse(x, y, &l, depth - 1) + brute_min_sse(x, y, &r, depth - 1));
        }
        best
    }

    #[test]
    fn step_function_matches_brute_force_at_depth_three() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let x = Matrix::from_rows(&xs.iter().map(|&v| [v]).collect::<Vec<_>>()).unwrap();
        let steps: [&[f64]; 3] = [
            &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            &[0.0, 0.0, 2.0, 2.0, 2.0, 5.0, 5.0, 5.0],
            &[1.0, 1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0],
        ];
        for y in steps {
            let t = fit_tree(&x, y, 3, 1).unwrap();
            let brute = brute_min_sse(&xs, y, &(0..8).collect::<Vec<_>>(), 3);
            assert!((sse_of(&t, &x, y) - brute).abs() < 1e-12);
        }
        // on a noisy step greedy and optimal may diverge; the optimum is
        // still a lower bound
        let noisy = [0.1, -0.2, 0.05, 1.1, 0.9, 1.3, 0.8, 1.0];
        let t = fit_tree(&x, &noisy, 3, 1).unwrap();
        let brute = brute_min_sse(&xs, &noisy, &(0..8).collect::<Vec<_>>(), 3);
        assert!(brute <= sse_of(&t, &x, &noisy) + 1e-12);
    }

    #[test]
    fn serializes_with_kind_tag() {
        let t = TreeNode::Split {
            feature: 0,
            threshold: 0.5,
            left: Box::new(TreeNode::Leaf { value: 0.0 }),
            right: Box::new(TreeNode::Leaf { value: 1.0 }),
        };
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.starts_with(r#"{"kind":"split""#));
        assert_eq!(serde_json::from_str::<TreeNode>(&json).unwrap(), t);
    }
}
