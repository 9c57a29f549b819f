//! Subset search strategies.
//!
//! Every strategy scores subsets through an [`Evaluator`], which memoizes
//! scores, enforces the evaluation budget and fans independent evaluations
//! out to the rayon pool. Results never depend on the pool size: batches are
//! scored in parallel but inserted and consumed in input order.

mod bfs;
mod exhaustive;
mod genetic;
mod greedy;
mod queue;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ScoreCache, ScoredNode, SubsetScorer};
use crate::lattice::FeatureSubset;

pub use bfs::{bfs_crossover, greedy_bfs};
pub use exhaustive::{exhaustive, EXHAUSTIVE_MAX_FEATURES};
pub use genetic::{genetic, genetic_from, GaParams, GeneticOutcome};
pub use greedy::{greedy_backward, greedy_forward};
pub use queue::PriorityQueue;

/// Patience value that never trips.
pub const INFINITE_PATIENCE: u64 = u64::MAX;

/// Default cap on distinct subsets scored by one search.
pub const DEFAULT_BUDGET: u64 = 20_000;

/// Memoizing, budgeted front end to a scorer.
pub struct Evaluator<'s> {
    scorer: &'s dyn SubsetScorer,
    cache: ScoreCache,
    budget: u64,
}

impl<'s> Evaluator<'s> {
    pub fn new(scorer: &'s dyn SubsetScorer, budget: u64) -> Self {
        Self {
            scorer,
            cache: ScoreCache::new(),
            budget,
        }
    }

    pub fn n_features(&self) -> usize {
        self.scorer.n_features()
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    /// Distinct subsets scored so far.
    pub fn evaluations(&self) -> u64 {
        self.cache.len() as u64
    }

    pub fn model_fits(&self) -> u64 {
        self.evaluations() * self.scorer.fits_per_evaluation()
    }

    pub fn score(&self, subset: &FeatureSubset) -> Result<f64> {
        Ok(self.score_all(std::slice::from_ref(subset))?[0])
    }

    /// Scores of `subsets` in input order.
    ///
    /// All-or-nothing: if the uncached subsets do not fit in the remaining
    /// budget, nothing is scored and [`Error::Budget`] is returned.
    pub fn score_all(&self, subsets: &[FeatureSubset]) -> Result<Vec<f64>> {
        let mut seen = HashSet::new();
        let missing: Vec<&FeatureSubset> = subsets
            .iter()
            .filter(|s| !self.cache.contains(s) && seen.insert(*s))
            .collect();
        if self.evaluations() + missing.len() as u64 > self.budget {
            return Err(Error::Budget { limit: self.budget });
        }
        let computed: Vec<f64> = missing
            .par_iter()
            .map(|s| self.scorer.score(s))
            .collect::<Result<_>>()?;
        for (s, v) in missing.iter().zip(computed) {
            self.cache.record_miss();
            self.cache.insert((*s).clone(), v);
        }
        for _ in missing.len()..subsets.len() {
            self.cache.record_hit();
        }
        subsets
            .iter()
            .map(|s| {
                let v = self.cache.peek(s).expect("scored above");
                Ok(v)
            })
            .collect()
    }

    fn node(&self, subset: FeatureSubset, score: f64) -> ScoredNode {
        ScoredNode {
            subset,
            score,
            eval_cost: self.scorer.fits_per_evaluation(),
        }
    }
}

/// One step of a search: the node expanded (or generation summarized) and
/// the best score seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub expansion: usize,
    /// Distinct subsets scored when this row was recorded.
    pub evaluations: u64,
    pub subset: FeatureSubset,
    pub score: f64,
    pub best_score: f64,
    /// Crossover node generated at this expansion, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<FeatureSubset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub strategy: String,
    pub best: ScoredNode,
    pub best_features: Vec<usize>,
    pub trace: Vec<TraceRow>,
    pub evaluations: u64,
    pub model_fits: u64,
    pub cache_hits: u64,
    /// The search stopped because the next batch would exceed the budget.
    pub budget_exhausted: bool,
    /// Strategy-specific counters.
    #[serde(default)]
    pub counters: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    /// Seconds; kept out of serialized reports so they reproduce byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SearchReport {
    /// Trace as CSV, one row per expansion.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::Ingestion(format!("writing trace: {e}"));
        w.write_record(["expansion", "evaluations", "score", "best_score", "size", "subset"])
            .map_err(wrap)?;
        for r in &self.trace {
            w.write_record([
                r.expansion.to_string(),
                r.evaluations.to_string(),
                r.score.to_string(),
                r.best_score.to_string(),
                r.subset.count().to_string(),
                r.subset.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::Ingestion(format!("writing trace: {e}")))
    }
}

/// Bookkeeping shared by the strategies.
struct Run<'e, 's> {
    eval: &'e Evaluator<'s>,
    strategy: &'static str,
    start: Instant,
    trace: Vec<TraceRow>,
    best: Option<(FeatureSubset, f64)>,
    counters: BTreeMap<String, u64>,
    budget_exhausted: bool,
}

impl<'e, 's> Run<'e, 's> {
    fn new(eval: &'e Evaluator<'s>, strategy: &'static str) -> Self {
        Self {
            eval,
            strategy,
            start: Instant::now(),
            trace: Vec::new(),
            best: None,
            counters: BTreeMap::new(),
            budget_exhausted: false,
        }
    }

    fn best_score(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1)
    }

    /// Replaces the best node when `score` is strictly higher.
    fn offer(&mut self, subset: &FeatureSubset, score: f64) -> bool {
        if score > self.best_score() {
            self.best = Some((subset.clone(), score));
            true
        } else {
            false
        }
    }

    /// Like [`Run::offer`], but equal scores go to the canonically smaller
    /// subset.
    fn offer_canonical(&mut self, subset: &FeatureSubset, score: f64) -> bool {
        let better = match &self.best {
            None => true,
            Some((b, s)) => score > *s || (score == *s && subset < b),
        };
        if better {
            self.best = Some((subset.clone(), score));
        }
        better
    }

    fn record(&mut self, subset: &FeatureSubset, score: f64, crossover: Option<FeatureSubset>) {
        self.trace.push(TraceRow {
            expansion: self.trace.len(),
            evaluations: self.eval.evaluations(),
            subset: subset.clone(),
            score,
            best_score: self.best_score(),
            crossover,
        });
    }

    fn bump(&mut self, counter: &str) {
        *self.counters.entry(counter.to_string()).or_default() += 1;
    }

    /// Maps a budget error to a clean stop; other errors pass through.
    fn absorb_budget<T>(&mut self, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::Budget { .. }) => {
                self.budget_exhausted = true;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, config: serde_json::Value) -> Result<SearchReport> {
        let (subset, score) = self.best.ok_or(Error::Budget {
            limit: self.eval.budget,
        })?;
        Ok(SearchReport {
            strategy: self.strategy.to_string(),
            best_features: subset.indices(),
            best: self.eval.node(subset, score),
            trace: self.trace,
            evaluations: self.eval.evaluations(),
            model_fits: self.eval.model_fits(),
            cache_hits: self.eval.cache.hits(),
            budget_exhausted: self.budget_exhausted,
            counters: self.counters,
            config,
            wall_time: self.start.elapsed().as_secs_f64(),
        })
    }
}
