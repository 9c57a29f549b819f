//! Sequential forward and backward selection.

use serde_json::json;

use super::{Evaluator, Run, SearchReport};
use crate::error::{Error, Result};
use crate::eval::SubsetScorer;
use crate::lattice::FeatureSubset;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

/// Starts from the empty set and repeatedly adds the single feature whose
/// addition scores best. Stops after `max_no_improve` consecutive steps that
/// fail to beat the best score, or when every feature is selected.
pub fn greedy_forward(scorer: &dyn SubsetScorer, max_no_improve: u64, budget: u64) -> Result<SearchReport> {
    sequential(scorer, Direction::Forward, max_no_improve, budget)
}

/// Mirror image of [`greedy_forward`]: starts from the full set and removes
/// one feature per step.
pub fn greedy_backward(scorer: &dyn SubsetScorer, max_no_improve: u64, budget: u64) -> Result<SearchReport> {
    sequential(scorer, Direction::Backward, max_no_improve, budget)
}

fn sequential(scorer: &dyn SubsetScorer, dir: Direction, max_no_improve: u64, budget: u64) -> Result<SearchReport> {
    let m = scorer.n_features();
    if m == 0 {
        return Err(Error::domain("search needs at least one feature"));
    }
    if max_no_improve == 0 {
        return Err(Error::domain("max_no_improve must be at least 1"));
    }
    let (name, start) = match dir {
        Direction::Forward => ("greedy_forward", FeatureSubset::empty(m)?),
        Direction::Backward => ("greedy_backward", FeatureSubset::full(m)?),
    };
    let eval = Evaluator::new(scorer, budget);
    let mut run = Run::new(&eval, name);

    let mut current = start;
    let Some(mut score) = run.absorb_budget(eval.score(&current))? else {
        return run.finish(config(max_no_improve, budget));
    };
    run.offer(&current, score);
    run.record(&current, score, None);

    let mut stale = 0;
    loop {
        let moves: Vec<FeatureSubset> = (0..m)
            .filter(|&j| current.contains(j) == (dir == Direction::Backward))
            .map(|j| current.flipped(j))
            .collect();
        if moves.is_empty() {
            break;
        }
        let Some(scores) = run.absorb_budget(eval.score_all(&moves))? else {
            break;
        };
        let (next, next_score) = moves
            .into_iter()
            .zip(scores)
            .reduce(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
            .expect("non-empty");
        current = next;
        score = next_score;
        if run.offer(&current, score) {
            stale = 0;
        } else {
            stale += 1;
        }
        run.record(&current, score, None);
        if stale >= max_no_improve {
            break;
        }
    }
    run.finish(config(max_no_improve, budget))
}

fn config(max_no_improve: u64, budget: u64) -> serde_json::Value {
    json!({ "max_no_improve": max_no_improve, "budget": budget })
}
