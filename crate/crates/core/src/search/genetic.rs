//! Bit-string genetic algorithm baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Evaluator, Run, SearchReport};
use crate::error::{Error, Result};
use crate::eval::SubsetScorer;
use crate::lattice::{make_subset, FeatureSubset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    /// Per-bit flip probability; `None` means `1 / M`.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    /// Best individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// Probability that a child comes from uniform crossover rather than a
    /// copy of its first parent.
    pub crossover_rate: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 40,
            mutation_rate: None,
            tournament_size: 3,
            elitism: 2,
            crossover_rate: 1.0,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::domain("population_size must be at least 2"));
        }
        if self.elitism >= self.population_size {
            return Err(Error::domain("elitism must be smaller than population_size"));
        }
        if self.tournament_size == 0 {
            return Err(Error::domain("tournament_size must be at least 1"));
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !self.mutation_rate.is_none_or(unit) || !unit(self.crossover_rate) {
            return Err(Error::domain("mutation_rate and crossover_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Report plus the last scored generation.
#[derive(Debug, Clone)]
pub struct GeneticOutcome {
    pub report: SearchReport,
    pub population: Vec<FeatureSubset>,
}

/// Genetic search from a population with every bit drawn as a fair coin.
///
/// Each generation keeps the `elitism` fittest individuals and fills the rest
/// by tournament selection, uniform crossover and per-bit mutation. Returns
/// the best subset ever scored. The trace has one row per generation.
pub fn genetic(scorer: &dyn SubsetScorer, params: &GaParams, budget: u64) -> Result<SearchReport> {
    params.validate()?;
    let m = scorer.n_features();
    if m == 0 {
        return Err(Error::domain("search needs at least one feature"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let initial = (0..params.population_size)
        .map(|_| make_subset((0..m).filter(|_| rng.random_bool(0.5)), m))
        .collect::<Result<Vec<_>>>()?;
    Ok(evolve(scorer, params, budget, initial, rng)?.report)
}

/// Genetic search from a given initial population.
pub fn genetic_from(
    scorer: &dyn SubsetScorer,
    params: &GaParams,
    budget: u64,
    initial: Vec<FeatureSubset>,
) -> Result<GeneticOutcome> {
    params.validate()?;
    if initial.len() != params.population_size {
        return Err(Error::domain(format!(
            "initial population has {} individuals, expected {}",
            initial.len(),
            params.population_size
        )));
    }
    if initial.iter().any(|s| s.width() != scorer.n_features()) {
        return Err(Error::domain("initial population width differs from the feature count"));
    }
    let rng = ChaCha8Rng::seed_from_u64(params.seed);
    evolve(scorer, params, budget, initial, rng)
}

fn evolve(
    scorer: &dyn SubsetScorer,
    params: &GaParams,
    budget: u64,
    mut population: Vec<FeatureSubset>,
    mut rng: ChaCha8Rng,
) -> Result<GeneticOutcome> {
    let m = scorer.n_features();
    let mu = params.mutation_rate.unwrap_or(1.0 / m as f64);
    let config = serde_json::to_value(params)?;
    let eval = Evaluator::new(scorer, budget);
    let mut run = Run::new(&eval, "genetic");

    let Some(mut fitness) = run.absorb_budget(eval.score_all(&population))? else {
        let report = run.finish(config)?;
        return Ok(GeneticOutcome { report, population });
    };
    note_generation(&mut run, &population, &fitness);

    for _ in 0..params.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitter(&population, &fitness, a, b));
        let mut next: Vec<FeatureSubset> = ranked[..params.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < params.population_size {
            let a = tournament(&mut rng, &population, &fitness, params.tournament_size);
            let b = tournament(&mut rng, &population, &fitness, params.tournament_size);
            let cross = rng.random_bool(params.crossover_rate);
            let child = (0..m).filter(|&j| {
                let from_b = cross && rng.random_bool(0.5);
                let bit = if from_b {
                    population[b].contains(j)
                } else {
                    population[a].contains(j)
                };
                bit != (mu > 0.0 && rng.random_bool(mu))
            });
            next.push(make_subset(child, m)?);
        }
        let Some(scores) = run.absorb_budget(eval.score_all(&next))? else {
            break;
        };
        population = next;
        fitness = scores;
        note_generation(&mut run, &population, &fitness);
    }
    let report = run.finish(config)?;
    Ok(GeneticOutcome { report, population })
}

/// Orders indices fittest first; equal fitness falls back to subset order.
fn fitter(pop: &[FeatureSubset], fit: &[f64], a: usize, b: usize) -> std::cmp::Ordering {
    fit[b].total_cmp(&fit[a]).then_with(|| pop[a].cmp(&pop[b]))
}

fn tournament(rng: &mut ChaCha8Rng, pop: &[FeatureSubset], fit: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        if fitter(pop, fit, c, best).is_lt() {
            best = c;
        }
    }
    best
}

fn note_generation(run: &mut Run, population: &[FeatureSubset], fitness: &[f64]) {
    let top = (0..population.len())
        .min_by(|&a, &b| fitter(population, fitness, a, b))
        .expect("population is non-empty");
    for (s, &f) in population.iter().zip(fitness) {
        run.offer_canonical(s, f);
    }
    run.record(&population[top], fitness[top], None);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FnScorer;
    use crate::search::DEFAULT_BUDGET;

    #[test]
    fn elitism_keeps_best_ever_monotone() {
        let s = FnScorer::new(16, |v: &FeatureSubset| v.count() as f64 / 16.0);
        let p = GaParams {
            generations: 20,
            seed: 4,
            ..Default::default()
        };
        let r = genetic(&s, &p, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.trace.len(), 21);
        let initial = r.trace[0].score;
        assert!(r.best.score >= initial);
        for w in r.trace.windows(2) {
            // with elitism the generation leader never gets worse
            assert!(w[1].score >= w[0].score);
        }
        assert!(r.best.score > initial, "popcount should improve over 20 generations");
    }

    #[test]
    fn fixed_point_without_variation() {
        let s = FnScorer::new(8, |v: &FeatureSubset| v.count() as f64);
        let p = GaParams {
            population_size: 6,
            generations: 5,
            mutation_rate: Some(0.0),
            crossover_rate: 0.0,
            ..Default::default()
        };
        let ind: FeatureSubset = "01100101".parse().unwrap();
        let out = genetic_from(&s, &p, DEFAULT_BUDGET, vec![ind.clone(); 6]).unwrap();
        assert_eq!(out.population, vec![ind; 6]);
        assert_eq!(out.report.evaluations, 1);
        assert_eq!(out.report.trace.len(), 6);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = FnScorer::new(12, |v: &FeatureSubset| (v.count() as f64 - 5.0).abs().recip().min(9.0));
        let p = GaParams {
            seed: 7,
            generations: 10,
            ..Default::default()
        };
        let a = genetic(&s, &p, DEFAULT_BUDGET).unwrap();
        let b = genetic(&s, &p, DEFAULT_BUDGET).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = genetic(&s, &GaParams { seed: 8, ..p }, DEFAULT_BUDGET).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn budget_truncates_between_generations() {
        let s = FnScorer::new(30, |v: &FeatureSubset| v.count() as f64);
        let r = genetic(&s, &GaParams::default(), 120).unwrap();
        assert!(r.budget_exhausted);
        assert!(r.evaluations <= 120);
        assert!(r.trace.len() >= 2);
    }

    #[test]
    fn invalid_params() {
        let s = FnScorer::new(4, |_: &FeatureSubset| 0.0);
        let bad = [
            GaParams {
                population_size: 1,
                elitism: 0,
                ..Default::default()
            },
            GaParams {
                elitism: 50,
                ..Default::default()
            },
            GaParams {
                tournament_size: 0,
                ..Default::default()
            },
            GaParams {
                mutation_rate: Some(1.5),
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(genetic(&s, &p, DEFAULT_BUDGET).is_err());
        }
    }
}
