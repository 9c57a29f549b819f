//! Greedy best-first search over the subset lattice, with and without the
//! crossover jump.

use std::collections::HashSet;

use serde_json::json;

use super::{Evaluator, PriorityQueue, Run, SearchReport};
use crate::error::{Error, Result};
use crate::eval::SubsetScorer;
use crate::lattice::{crossover, neighbors, FeatureSubset};

/// Best-first search from the empty set.
///
/// Pops the highest-scoring open node, scores its unvisited neighbors and
/// pushes them. `i` counts consecutive pops that fail to beat the best score;
/// the search returns once `i > patience` or the open queue runs dry.
pub fn greedy_bfs(scorer: &dyn SubsetScorer, patience: u64, budget: u64) -> Result<SearchReport> {
    best_first(scorer, patience, budget, false)
}

/// [`greedy_bfs`] plus a crossover step: after each expansion the two best
/// new children `first`, `second` of `current` are combined into
/// `first + second - current`, which is scored and pushed if unvisited.
///
/// A pending crossover node is expanded next when its score beats every
/// other open node.
pub fn bfs_crossover(scorer: &dyn SubsetScorer, patience: u64, budget: u64) -> Result<SearchReport> {
    best_first(scorer, patience, budget, true)
}

fn best_first(scorer: &dyn SubsetScorer, patience: u64, budget: u64, with_cross: bool) -> Result<SearchReport> {
    let m = scorer.n_features();
    if m == 0 {
        return Err(Error::domain("search needs at least one feature"));
    }
    if patience == 0 {
        return Err(Error::domain("patience must be at least 1"));
    }
    let name = if with_cross { "bfs_crossover" } else { "greedy_bfs" };
    let config = json!({ "patience": patience, "budget": budget });
    let eval = Evaluator::new(scorer, budget);
    let mut run = Run::new(&eval, name);

    let start = FeatureSubset::empty(m)?;
    let Some(start_score) = run.absorb_budget(eval.score(&start))? else {
        return run.finish(config);
    };
    let mut open = PriorityQueue::new();
    let mut close: HashSet<FeatureSubset> = HashSet::new();
    open.push(start.clone(), start_score);
    // best starts as the root itself, so popping the root counts as a
    // non-improving step
    run.offer(&start, start_score);
    let mut stale: u64 = 0;
    let mut cross: Option<FeatureSubset> = None;

    loop {
        let taken = cross.take().filter(|c| {
            let Some(score) = open.score_of(c) else {
                return false;
            };
            open.peek_max_excluding(c).is_none_or(|(_, other)| score > other)
        });
        let (current, score) = match taken {
            Some(c) => {
                let s = open.remove(&c).expect("pending cross is open");
                run.bump("crossovers_taken");
                (c, s)
            }
            None => match open.pop_max() {
                Some(top) => top,
                None => break,
            },
        };
        close.insert(current.clone());
        if run.offer(&current, score) {
            stale = 0;
        } else {
            stale += 1;
        }
        if stale > patience {
            run.record(&current, score, None);
            break;
        }

        let children: Vec<FeatureSubset> = neighbors(&current)
            .into_iter()
            .filter(|c| !open.contains(c) && !close.contains(c))
            .collect();
        let Some(scores) = run.absorb_budget(eval.score_all(&children))? else {
            run.record(&current, score, None);
            break;
        };
        let mut local = PriorityQueue::new();
        for (c, s) in children.into_iter().zip(scores) {
            local.push(c.clone(), s);
            open.push(c, s);
        }

        let mut generated = None;
        if with_cross && local.len() >= 2 {
            let (first, _) = local.pop_max().expect("two children");
            let (second, _) = local.pop_max().expect("two children");
            let c = crossover(&current, &first, &second)?;
            run.bump("crossovers_generated");
            generated = Some(c.clone());
            if close.contains(&c) {
                // already expanded; nothing pending
            } else if open.contains(&c) {
                cross = Some(c);
            } else {
                let Some(s) = run.absorb_budget(eval.score(&c))? else {
                    run.record(&current, score, generated);
                    break;
                };
                open.push(c.clone(), s);
                run.bump("crossovers_enqueued");
                cross = Some(c);
            }
        }
        run.record(&current, score, generated);
    }
    run.finish(config)
}
