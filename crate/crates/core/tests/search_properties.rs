use featsel::eval::FnScorer;
use featsel::lattice::hamming;
use featsel::search::{
    bfs_crossover, exhaustive, genetic, greedy_backward, greedy_bfs, greedy_forward, GaParams, SearchReport,
    DEFAULT_BUDGET, INFINITE_PATIENCE,
};
use featsel::{Error, FeatureSubset};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn index(s: &FeatureSubset) -> usize {
    s.indices().iter().map(|j| 1usize << j).sum()
}

/// Random score for every subset of `m` features. With `coarse`, scores take
/// few distinct values so ties are common.
fn table(m: usize, seed: u64, coarse: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..1usize << m)
        .map(|_| {
            if coarse {
                f64::from(rng.random_range(0..4u8))
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

fn best_is_monotone(r: &SearchReport) -> bool {
    r.trace.windows(2).all(|w| w[1].best_score >= w[0].best_score)
        && r.trace.last().is_none_or(|t| t.best_score == r.best.score)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn best_so_far_never_decreases(m in 2usize..8, seed in any::<u64>(), coarse in any::<bool>()) {
        let t = table(m, seed, coarse);
        let s = FnScorer::new(m, |x: &FeatureSubset| t[index(x)]);
        let ga = GaParams { population_size: 12, generations: 6, seed, ..Default::default() };
        for r in [
            greedy_forward(&s, 2, DEFAULT_BUDGET).unwrap(),
            greedy_backward(&s, 2, DEFAULT_BUDGET).unwrap(),
            greedy_bfs(&s, 4, DEFAULT_BUDGET).unwrap(),
            bfs_crossover(&s, 4, DEFAULT_BUDGET).unwrap(),
            genetic(&s, &ga, DEFAULT_BUDGET).unwrap(),
            exhaustive(&s).unwrap(),
        ] {
            prop_assert!(best_is_monotone(&r), "{}", r.strategy);
            prop_assert_eq!(t[index(&r.best.subset)], r.best.score);
        }
    }

    #[test]
    fn best_first_dominates_forward(m in 2usize..9, seed in any::<u64>(), coarse in any::<bool>(), p in 1u64..6) {
        let t = table(m, seed, coarse);
        let s = FnScorer::new(m, |x: &FeatureSubset| t[index(x)]);
        let fwd = greedy_forward(&s, 1, DEFAULT_BUDGET).unwrap().best.score;
        prop_assert!(greedy_bfs(&s, p, DEFAULT_BUDGET).unwrap().best.score >= fwd);
    }

    #[test]
    fn infinite_patience_finds_the_optimum(m in 1usize..9, seed in any::<u64>(), coarse in any::<bool>()) {
        let t = table(m, seed, coarse);
        let s = FnScorer::new(m, |x: &FeatureSubset| t[index(x)]);
        let max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(greedy_bfs(&s, INFINITE_PATIENCE, DEFAULT_BUDGET).unwrap().best.score, max);
        prop_assert_eq!(bfs_crossover(&s, INFINITE_PATIENCE, DEFAULT_BUDGET).unwrap().best.score, max);
        let e = exhaustive(&s).unwrap();
        prop_assert_eq!(e.best.score, max);
        prop_assert_eq!(e.evaluations, 1u64 << m);
    }

    #[test]
    fn crossovers_land_two_steps_from_the_expanded_node(m in 2usize..9, seed in any::<u64>()) {
        let t = table(m, seed, false);
        let s = FnScorer::new(m, |x: &FeatureSubset| t[index(x)]);
        let r = bfs_crossover(&s, 6, DEFAULT_BUDGET).unwrap();
        let mut seen = 0;
        for row in &r.trace {
            if let Some(c) = &row.crossover {
                prop_assert_eq!(hamming(&row.subset, c).unwrap(), 2);
                seen += 1;
            }
        }
        prop_assert_eq!(seen, r.counters.get("crossovers_generated").copied().unwrap_or(0));
    }

    #[test]
    fn budget_is_never_exceeded(m in 3usize..9, seed in any::<u64>(), budget in 1u64..60) {
        let t = table(m, seed, false);
        let s = FnScorer::new(m, |x: &FeatureSubset| t[index(x)]);
        let ga = GaParams { population_size: 10, generations: 5, seed, ..Default::default() };
        for r in [
            greedy_forward(&s, 3, budget),
            greedy_backward(&s, 3, budget),
            greedy_bfs(&s, INFINITE_PATIENCE, budget),
            bfs_crossover(&s, INFINITE_PATIENCE, budget),
        ] {
            let r = r.unwrap();
            prop_assert!(r.evaluations <= budget, "{}", r.strategy);
        }
        // a population that does not fit the budget leaves nothing to report
        match genetic(&s, &ga, budget) {
            Ok(r) => prop_assert!(r.evaluations <= budget),
            Err(Error::Budget { limit }) => prop_assert!(limit == budget && budget < 10),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

/// The crossover child can pull the search off forward's path before
/// patience runs out, so BFS-X carries no such guarantee.
#[test]
fn crossover_search_can_fall_short_of_forward() {
    let t = table(7, 6535843173379116866, false);
    let s = FnScorer::new(7, |x: &FeatureSubset| t[index(x)]);
    let fwd = greedy_forward(&s, 1, DEFAULT_BUDGET).unwrap();
    let bfsx = bfs_crossover(&s, 1, DEFAULT_BUDGET).unwrap();
    assert_eq!(fwd.best.subset.to_string(), "1010010");
    assert_eq!(bfsx.best.subset.to_string(), "0110111");
    assert!(bfsx.best.score < fwd.best.score);
    assert!(greedy_bfs(&s, 1, DEFAULT_BUDGET).unwrap().best.score >= fwd.best.score);
}

#[test]
fn reports_serialize_identically_on_rerun() {
    let t = table(8, 3, true);
    let s = FnScorer::new(8, |x: &FeatureSubset| t[index(x)]);
    let ga = GaParams {
        seed: 5,
        ..Default::default()
    };
    let run = || {
        [
            greedy_forward(&s, 1, DEFAULT_BUDGET).unwrap(),
            greedy_bfs(&s, 5, DEFAULT_BUDGET).unwrap(),
            bfs_crossover(&s, 5, DEFAULT_BUDGET).unwrap(),
            genetic(&s, &ga, DEFAULT_BUDGET).unwrap(),
        ]
        .map(|r| serde_json::to_string(&r).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn report_round_trips_through_json() {
    let t = table(6, 9, false);
    let s = FnScorer::new(6, |x: &FeatureSubset| t[index(x)]);
    let r = bfs_crossover(&s, 3, DEFAULT_BUDGET).unwrap();
    let back: SearchReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back.trace, r.trace);
    assert_eq!(back.best, r.best);
    assert_eq!(back.counters, r.counters);
}
