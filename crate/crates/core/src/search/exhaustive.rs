//! Brute-force oracle for small feature counts.

use serde_json::json;

use super::{Evaluator, Run, SearchReport};
use crate::error::{Error, Result};
use crate::eval::SubsetScorer;
use crate::lattice::{make_subset, FeatureSubset};

/// Largest feature count [`exhaustive`] accepts.
pub const EXHAUSTIVE_MAX_FEATURES: usize = 20;

const CHUNK: usize = 4096;

/// Scores all `2^M` subsets. Ties go to the canonically smallest subset, the
/// same order the best-first queue pops in. The trace lists each subset that
/// became the best.
pub fn exhaustive(scorer: &dyn SubsetScorer) -> Result<SearchReport> {
    let m = scorer.n_features();
    if m == 0 {
        return Err(Error::domain("search needs at least one feature"));
    }
    if m > EXHAUSTIVE_MAX_FEATURES {
        return Err(Error::Budget {
            limit: 1 << EXHAUSTIVE_MAX_FEATURES,
        });
    }
    let total = 1usize << m;
    let eval = Evaluator::new(scorer, total as u64);
    let mut run = Run::new(&eval, "exhaustive");
    let mut code = 0usize;
    while code < total {
        let end = (code + CHUNK).min(total);
        let batch: Vec<FeatureSubset> = (code..end).map(|c| subset_of(c, m)).collect::<Result<_>>()?;
        let scores = eval.score_all(&batch)?;
        for (s, v) in batch.iter().zip(scores) {
            if run.offer_canonical(s, v) {
                run.record(s, v, None);
            }
        }
        code = end;
    }
    run.finish(json!({ "features": m }))
}

fn subset_of(code: usize, m: usize) -> Result<FeatureSubset> {
    make_subset((0..m).filter(|i| code >> i & 1 == 1), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FnScorer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_features_popcount() {
        let s = FnScorer::new(2, |v: &FeatureSubset| v.count() as f64);
        let r = exhaustive(&s).unwrap();
        assert_eq!(r.best.subset.to_string(), "11");
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let table: Vec<f64> = (0..1024).map(|_| rng.random()).collect();
        let s = FnScorer::new(10, |v: &FeatureSubset| {
            table[v.indices().iter().map(|&i| 1 << i).sum::<usize>()]
        });
        let r = exhaustive(&s).unwrap();
        let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best.score, max);
        assert_eq!(r.evaluations, 1024);
    }

    #[test]
    fn ties_prefer_small_then_lexicographic() {
        let s = FnScorer::new(3, |v: &FeatureSubset| f64::from(v.count() >= 1));
        assert_eq!(exhaustive(&s).unwrap().best.subset.to_string(), "001");
        let s = FnScorer::new(3, |_: &FeatureSubset| 0.0);
        assert_eq!(exhaustive(&s).unwrap().best.subset.to_string(), "000");
    }

    #[test]
    fn refuses_large_m() {
        let s = FnScorer::new(21, |_: &FeatureSubset| 0.0);
        assert!(matches!(exhaustive(&s), Err(Error::Budget { .. })));
    }
}
