//! Runs the configured strategies on one dataset and writes their artifacts.
//!
//! Layout under the output directory:
//!
//! ```text
//! <out>/<strategy>/report.json
//! <out>/<strategy>/trace.csv
//! <out>/<strategy>/predictions.csv
//! <out>/comparison.json
//! <out>/comparison.txt
//! ```
//!
//! Every file is a function of the config alone. Wall-clock times are kept
//! in memory and only printed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use featsel::eval::{pearson, CvParams, CvScorer, DepthGridScorer, SubsetScorer};
use featsel::featurize::{
    build_feature_table, load_csv_with, load_targets, synth_dataset, CsvOptions, GroupedSamples, SynthSpec,
};
use featsel::models::GbtParams;
use featsel::search::{
    bfs_crossover, exhaustive, genetic, greedy_backward, greedy_bfs, greedy_forward, GaParams, SearchReport,
};
use featsel::{Dataset, DatasetMeta, FeatureSubset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{meta_path_for, BudgetPolicy, DatasetSource, ExperimentConfig, StrategySpec};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One strategy's line in the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Cross-validated r² of the best subset.
    pub r2: Option<f64>,
    /// Correlation between the target and the held-out predictions of the
    /// best subset, averaged over repeats.
    pub pearson_r: Option<f64>,
    pub p_value: Option<f64>,
    pub evaluations: u64,
    pub model_fits: u64,
    pub budget_exhausted: bool,
    pub n_selected: usize,
    pub best_subset: Option<String>,
    pub selected_features: Vec<String>,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<String>,
    pub n_samples: usize,
    pub n_features: usize,
    /// Tree depth used by every search; `None` when each subset is scored
    /// at its own best depth.
    pub max_depth: Option<usize>,
    /// Fits spent choosing the depth; zero without a depth grid.
    pub depth_grid_fits: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == RowStatus::Failed)
    }

    /// Aligned text table; wall times are included only on request so the
    /// saved table stays reproducible.
    pub fn to_table(&self, with_wall_time: bool) -> String {
        let mut header = vec![
            "strategy",
            "status",
            "r2",
            "pearson_r",
            "p_value",
            "evals",
            "fits",
            "selected",
        ];
        if with_wall_time {
            header.push("wall_s");
        }
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![
                    r.strategy.clone(),
                    match r.status {
                        RowStatus::Ok => "ok".into(),
                        RowStatus::Failed => "FAILED".into(),
                    },
                    opt(r.r2, 4),
                    opt(r.pearson_r, 4),
                    r.p_value.map_or("-".into(), |p| format!("{p:.3e}")),
                    r.evaluations.to_string(),
                    r.model_fits.to_string(),
                    r.n_selected.to_string(),
                ];
                if with_wall_time {
                    cells.push(format!("{:.1}", r.wall_time));
                }
                cells
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "target = {}{}, N = {}, M = {}, depth {}",
            self.target,
            self.cohort.as_ref().map_or(String::new(), |c| format!(" [{c}]")),
            self.n_samples,
            self.n_features,
            self.max_depth.map_or("per subset".to_string(), |d| d.to_string())
        );
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(
            out,
            "{}",
            line(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        );
        for r in &rows {
            let _ = writeln!(out, "{}", line(r));
        }
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(out, "{}: {}", r.strategy, r.error.as_deref().unwrap_or_default());
        }
        out
    }
}

/// Everything a run produced, including the in-memory search reports.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub comparison: ComparisonReport,
    /// One entry per configured strategy; `None` where the search errored.
    pub reports: Vec<Option<SearchReport>>,
}

/// Loads the configured dataset and applies the cohort filter.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(Dataset, String)> {
    let (ds, target) = match &cfg.dataset {
        DatasetSource::Csv {
            path,
            target,
            cohort_column,
            ignore,
            meta,
        } => {
            let target = target
                .clone()
                .ok_or_else(|| CliError::Invalid("csv dataset needs a target".into()))?;
            let mut ds = load_csv_with(
                path,
                &CsvOptions {
                    target: target.clone(),
                    cohort_column: cohort_column.clone(),
                    ignore: ignore.clone(),
                },
            )?;
            let sidecar = meta
                .clone()
                .or_else(|| Some(meta_path_for(path)).filter(|p| p.is_file()));
            if let Some(p) = sidecar {
                ds = attach_meta(ds, DatasetMeta::load(&p)?)?;
            }
            (ds, target)
        }
        DatasetSource::Synth(s) => {
            let seed = s.seed.unwrap_or(cfg.seed);
            let spec = match &s.relevant {
                Some(r) => SynthSpec {
                    n: s.n,
                    m: s.m,
                    relevant: r.clone(),
                    effect: s.effect,
                    noise_sd: s.noise_sd,
                    seed,
                },
                None => SynthSpec::with_random_relevant(s.n, s.m, s.relevant_count, s.effect, s.noise_sd, seed)?,
            };
            let mut ds = synth_dataset(&spec)?;
            if !s.cohorts.is_empty() {
                let labels = (0..s.n).map(|i| s.cohorts[i % s.cohorts.len()].clone()).collect();
                ds = ds.with_cohorts(labels)?;
            }
            (ds, "target".to_string())
        }
        DatasetSource::Voxel { path, targets, target } => {
            let target = target
                .clone()
                .ok_or_else(|| CliError::Invalid("voxel dataset needs a target".into()))?;
            let grouped = GroupedSamples::load_voxel_csv(path)?;
            let values = load_targets(targets, &target)?;
            (build_feature_table(&grouped, &values)?, target)
        }
    };
    let ds = match &cfg.cohort {
        Some(c) => ds.filter_cohort(c)?,
        None => ds,
    };
    Ok((ds, target))
}

fn attach_meta(ds: Dataset, meta: DatasetMeta) -> Result<Dataset> {
    let mut ds = match meta.tags.clone() {
        Some(tags) => ds.with_tags(tags)?,
        None => ds,
    };
    ds.meta = meta;
    Ok(ds)
}

/// Runs every strategy, writes all artifacts and returns the comparison.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (ds, target) = load_dataset(cfg)?;
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_on(cfg, &ds, target))
        }
        None => run_on(cfg, &ds, target),
    }
}

fn run_on(cfg: &ExperimentConfig, ds: &Dataset, target: String) -> Result<ExperimentResult> {
    let cv = CvParams {
        seed: cfg.seed,
        ..cfg.cv
    };
    let base = CvScorer::new(ds, cfg.gbt, cv)?;
    let mut fixed = base.with_gbt(cfg.gbt)?;
    let mut depth_grid_fits = 0;
    if !cfg.depth_per_subset && !cfg.depth_grid.is_empty() {
        let (depth, _) = base.best_depth(&cfg.depth_grid)?;
        let mut grid = cfg.depth_grid.clone();
        grid.sort_unstable();
        grid.dedup();
        depth_grid_fits = grid.len() as u64 * cv.fits_per_evaluation();
        fixed = base.with_gbt(GbtParams {
            max_depth: depth,
            ..cfg.gbt
        })?;
    }
    let grid = if cfg.depth_per_subset {
        Some(DepthGridScorer::new(&base, &cfg.depth_grid)?)
    } else {
        None
    };
    let scoring = Scoring {
        fixed: &fixed,
        grid: grid.as_ref(),
    };
    let scorer = scoring.search();

    let n = cfg.strategies.len();
    let mut outcomes: Vec<Option<Result<SearchReport>>> = (0..n).map(|_| None).collect();
    let deferred = |s: &StrategySpec| {
        cfg.ga_match_bfsx_budget
            && matches!(s, StrategySpec::Genetic { .. })
            && cfg
                .strategies
                .iter()
                .any(|t| matches!(t, StrategySpec::BfsCrossover { .. }))
    };
    let first: Vec<usize> = (0..n).filter(|&i| !deferred(&cfg.strategies[i])).collect();
    let run = |i: &usize| run_strategy(cfg, scorer, &cfg.strategies[*i], cfg.budget);
    let done: Vec<Result<SearchReport>> = if cfg.parallel_strategies {
        first.par_iter().map(run).collect()
    } else {
        first.iter().map(run).collect()
    };
    for (i, r) in first.iter().zip(done) {
        outcomes[*i] = Some(r);
    }
    let bfsx_evals = cfg.strategies.iter().zip(&outcomes).find_map(|(s, o)| match (s, o) {
        (StrategySpec::BfsCrossover { .. }, Some(Ok(r))) => Some(r.evaluations),
        _ => None,
    });
    for (spec, slot) in cfg.strategies.iter().zip(outcomes.iter_mut()) {
        if slot.is_none() {
            let budget = bfsx_evals.map_or(cfg.budget, |e| e.min(cfg.budget));
            *slot = Some(run_strategy(cfg, scorer, spec, budget));
        }
    }

    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let mut rows = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for (spec, outcome) in cfg.strategies.iter().zip(outcomes) {
        let outcome = outcome.expect("every strategy ran");
        let row = match &outcome {
            Ok(report) => {
                let predictions = scoring.predictions(&report.best.subset)?;
                write_strategy_artifacts(&cfg.out_dir.join(spec.name()), ds, report, &predictions)?;
                summarize(cfg, ds, spec, report, &predictions)
            }
            Err(e) => failed_row(spec, e.to_string()),
        };
        rows.push(row);
        reports.push(outcome.ok());
    }

    let comparison = ComparisonReport {
        target,
        cohort: cfg.cohort.clone(),
        n_samples: ds.n_samples(),
        n_features: ds.n_features(),
        max_depth: grid.is_none().then_some(fixed.gbt().max_depth),
        depth_grid_fits,
        rows,
    };
    write_text(
        &cfg.out_dir.join("comparison.json"),
        &(serde_json::to_string_pretty(&comparison)? + "\n"),
    )?;
    write_text(&cfg.out_dir.join("comparison.txt"), &comparison.to_table(false))?;
    Ok(ExperimentResult { comparison, reports })
}

fn run_strategy(
    cfg: &ExperimentConfig,
    scorer: &dyn SubsetScorer,
    spec: &StrategySpec,
    budget: u64,
) -> Result<SearchReport> {
    let report = match spec {
        StrategySpec::GreedyForward { max_no_improve } => greedy_forward(scorer, max_no_improve.unwrap_or(1), budget)?,
        StrategySpec::GreedyBackward { max_no_improve } => {
            greedy_backward(scorer, max_no_improve.unwrap_or(1), budget)?
        }
        StrategySpec::GreedyBfs { .. } => greedy_bfs(scorer, cfg.patience_for(spec), budget)?,
        StrategySpec::BfsCrossover { .. } => bfs_crossover(scorer, cfg.patience_for(spec), budget)?,
        StrategySpec::Genetic { params } => {
            let params = GaParams {
                seed: cfg.seed,
                ..params.clone()
            };
            genetic(scorer, &params, budget)?
        }
        StrategySpec::Exhaustive {} => exhaustive(scorer)?,
    };
    Ok(report)
}

fn failed_row(spec: &StrategySpec, error: String) -> ComparisonRow {
    ComparisonRow {
        strategy: spec.name().to_string(),
        status: RowStatus::Failed,
        error: Some(error),
        r2: None,
        pearson_r: None,
        p_value: None,
        evaluations: 0,
        model_fits: 0,
        budget_exhausted: false,
        n_selected: 0,
        best_subset: None,
        selected_features: vec![],
        wall_time: 0.0,
    }
}

/// The scorer searches run against, plus what is needed to reproduce the
/// held-out predictions behind any score it gives.
struct Scoring<'a, 'd> {
    fixed: &'a CvScorer<'d>,
    grid: Option<&'a DepthGridScorer<'a, 'd>>,
}

/// Held-out predictions of one subset: per repeat, and averaged over repeats.
struct Predictions {
    per_repeat: Vec<Vec<f64>>,
    mean: Vec<f64>,
}

impl Scoring<'_, '_> {
    fn search(&self) -> &dyn SubsetScorer {
        match self.grid {
            Some(g) => g,
            None => self.fixed,
        }
    }

    fn predictions(&self, subset: &FeatureSubset) -> Result<Predictions> {
        let per_repeat = match self.grid {
            Some(g) => self
                .fixed
                .with_gbt(GbtParams {
                    max_depth: g.depth_for(subset)?,
                    ..*self.fixed.gbt()
                })?
                .held_out_predictions(subset)?,
            None => self.fixed.held_out_predictions(subset)?,
        };
        let n = per_repeat[0].len();
        let mean = (0..n)
            .map(|i| per_repeat.iter().map(|p| p[i]).sum::<f64>() / per_repeat.len() as f64)
            .collect();
        Ok(Predictions { per_repeat, mean })
    }
}

fn summarize(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    spec: &StrategySpec,
    report: &SearchReport,
    predictions: &Predictions,
) -> ComparisonRow {
    let corr = pearson(ds.y(), &predictions.mean).ok();
    let truncated = report.budget_exhausted && cfg.budget_policy == BudgetPolicy::Fail;
    ComparisonRow {
        strategy: spec.name().to_string(),
        status: if truncated { RowStatus::Failed } else { RowStatus::Ok },
        error: truncated.then(|| format!("evaluation budget of {} subsets exhausted", cfg.budget)),
        r2: Some(report.best.score),
        pearson_r: corr.map(|c| c.r),
        p_value: corr.map(|c| c.p),
        evaluations: report.evaluations,
        model_fits: report.model_fits,
        budget_exhausted: report.budget_exhausted,
        n_selected: report.best_features.len(),
        best_subset: Some(report.best.subset.to_string()),
        selected_features: report
            .best_features
            .iter()
            .map(|&j| ds.feature_names()[j].clone())
            .collect(),
        wall_time: report.wall_time,
    }
}

fn write_strategy_artifacts(dir: &Path, ds: &Dataset, report: &SearchReport, predictions: &Predictions) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_text(
        &dir.join("report.json"),
        &(serde_json::to_string_pretty(report)? + "\n"),
    )?;

    let mut trace = Vec::new();
    report.write_trace_csv(&mut trace)?;
    fs::write(dir.join("trace.csv"), trace).map_err(|e| CliError::io(&dir.join("trace.csv"), e))?;

    let Predictions { per_repeat, mean } = predictions;
    let mut csv = String::from("row,y_true,y_pred");
    for r in 0..per_repeat.len() {
        let _ = write!(csv, ",repeat_{r}");
    }
    csv.push('\n');
    for (i, (y, p)) in ds.y().iter().zip(mean).enumerate() {
        let _ = write!(csv, "{i},{y},{p}");
        for rep in per_repeat {
            let _ = write!(csv, ",{}", rep[i]);
        }
        csv.push('\n');
    }
    write_text(&dir.join("predictions.csv"), &csv)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
