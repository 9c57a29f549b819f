use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use super::scorer::{ScoredNode, SubsetScorer};
use crate::error::Result;
use crate::lattice::FeatureSubset;

/// Memo of subset scores for one run.
///
/// Safe to share between threads. The first score inserted for a subset is
/// the one every later lookup sees.
#[derive(Debug, Default)]
pub struct ScoreCache {
    map: RwLock<HashMap<FeatureSubset, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("score cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Cached score without touching the hit/miss counters.
    pub fn peek(&self, subset: &FeatureSubset) -> Option<f64> {
        self.map.read().expect("score cache poisoned").get(subset).copied()
    }

    pub fn contains(&self, subset: &FeatureSubset) -> bool {
        self.peek(subset).is_some()
    }

    pub(crate) fn record_hit(&self) {
        self.hits.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_miss(&self) {
        self.misses.fetch_add(1, Ordering::Relaxed);
    }

    /// Inserts `score` unless the subset is already present; returns the score
    /// now stored.
    pub fn insert(&self, subset: FeatureSubset, score: f64) -> f64 {
        *self
            .map
            .write()
            .expect("score cache poisoned")
            .entry(subset)
            .or_insert(score)
    }

    /// All entries, sorted by subset.
    pub fn entries(&self) -> Vec<(FeatureSubset, f64)> {
        let mut v: Vec<_> = self
            .map
            .read()
            .expect("score cache poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

/// Returns the cached score of `subset`, computing and storing it on a miss.
pub fn cache_get_or_score(cache: &ScoreCache, subset: &FeatureSubset, scorer: &dyn SubsetScorer) -> Result<ScoredNode> {
    if let Some(score) = cache.peek(subset) {
        cache.record_hit();
        return Ok(ScoredNode {
            subset: subset.clone(),
            score,
            eval_cost: 0,
        });
    }
    cache.record_miss();
    let computed = scorer.score(subset)?;
    let score = cache.insert(subset.clone(), computed);
    Ok(ScoredNode {
        subset: subset.clone(),
        score,
        eval_cost: scorer.fits_per_evaluation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FnScorer;
    use crate::lattice::make_subset;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn hits_and_misses() {
        let calls = AtomicUsize::new(0);
        let scorer = FnScorer::new(4, |s: &FeatureSubset| {
            calls.fetch_add(1, Ordering::Relaxed);
            s.count() as f64
        });
        let cache = ScoreCache::new();
        let a = make_subset([1], 4).unwrap();
        let b = make_subset([1, 2], 4).unwrap();

        let first = cache_get_or_score(&cache, &a, &scorer).unwrap();
        let second = cache_get_or_score(&cache, &a, &scorer).unwrap();
        assert_eq!(first.score, second.score);
        assert_eq!((cache.hits(), cache.misses()), (1, 1));
        assert_eq!(calls.load(Ordering::Relaxed), 1);

        cache_get_or_score(&cache, &b, &scorer).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn first_insert_wins() {
        let cache = ScoreCache::new();
        let a = make_subset([0], 2).unwrap();
        assert_eq!(cache.insert(a.clone(), 0.25), 0.25);
        assert_eq!(cache.insert(a.clone(), 0.75), 0.25);
        assert_eq!(cache.peek(&a), Some(0.25));
    }

    #[test]
    fn concurrent_lookups_agree() {
        use rayon::prelude::*;
        let scorer = FnScorer::new(6, |s: &FeatureSubset| s.indices().iter().sum::<usize>() as f64);
        let cache = ScoreCache::new();
        let subsets: Vec<_> = (0..64u32)
            .map(|i| make_subset((0..6).filter(|b| i >> b & 1 == 1), 6).unwrap())
            .collect();
        let scores: Vec<f64> = subsets
            .par_iter()
            .chain(subsets.par_iter())
            .map(|s| cache_get_or_score(&cache, s, &scorer).unwrap().score)
            .collect();
        assert_eq!(cache.len(), 64);
        assert_eq!(scores[..64], scores[64..]);
    }
}
