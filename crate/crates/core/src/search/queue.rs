use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use crate::lattice::FeatureSubset;

#[derive(Debug, Clone)]
struct Entry {
    score: f64,
    subset: FeatureSubset,
}

// Highest score first, then fewer features, then the lexicographically
// smallest rendering.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.subset.cmp(&other.subset))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

/// Max-priority queue of scored subsets with exact membership queries and
/// removal by subset.
#[derive(Debug, Clone, Default)]
pub struct PriorityQueue {
    order: BTreeSet<Entry>,
    scores: HashMap<FeatureSubset, f64>,
}

impl PriorityQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn contains(&self, subset: &FeatureSubset) -> bool {
        self.scores.contains_key(subset)
    }

    pub fn score_of(&self, subset: &FeatureSubset) -> Option<f64> {
        self.scores.get(subset).copied()
    }

    /// Adds `subset`; returns false (and changes nothing) if already queued.
    pub fn push(&mut self, subset: FeatureSubset, score: f64) -> bool {
        if self.scores.contains_key(&subset) {
            return false;
        }
        self.scores.insert(subset.clone(), score);
        self.order.insert(Entry { score, subset });
        true
    }

    pub fn peek_max(&self) -> Option<(&FeatureSubset, f64)> {
        self.order.first().map(|e| (&e.subset, e.score))
    }

    /// The highest-priority entry other than `skip`.
    pub fn peek_max_excluding(&self, skip: &FeatureSubset) -> Option<(&FeatureSubset, f64)> {
        self.order
            .iter()
            .find(|e| &e.subset != skip)
            .map(|e| (&e.subset, e.score))
    }

    pub fn pop_max(&mut self) -> Option<(FeatureSubset, f64)> {
        let e = self.order.pop_first()?;
        self.scores.remove(&e.subset);
        Some((e.subset, e.score))
    }

    pub fn remove(&mut self, subset: &FeatureSubset) -> Option<f64> {
        let score = self.scores.remove(subset)?;
        self.order.remove(&Entry {
            score,
            subset: subset.clone(),
        });
        Some(score)
    }
}
