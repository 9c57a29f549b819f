//! Experiment configuration: one JSON document, with command-line flags
//! layered on top.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use featsel::eval::CvParams;
use featsel::featurize::Effect;
use featsel::models::GbtParams;
use featsel::search::{GaParams, DEFAULT_BUDGET, INFINITE_PATIENCE};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Patience used by the best-first strategies unless overridden.
pub const DEFAULT_PATIENCE: u64 = 25;

/// Tree depths tried on the full feature set before searching.
pub const DEFAULT_DEPTH_GRID: [usize; 4] = [2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Feature table with one target column.
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cohort_column: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        ignore: Vec<String>,
        /// Metadata sidecar; defaults to `<stem>.meta.json` next to the CSV
        /// when that file exists.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        meta: Option<PathBuf>,
    },
    /// Generated data with planted relevant features.
    Synth(SynthSource),
    /// Long-format voxel values plus a per-subject target table.
    Voxel {
        path: PathBuf,
        /// CSV with a `subject_id` column and one column per target.
        targets: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSource {
    pub n: usize,
    pub m: usize,
    /// Explicit planted features; when absent, `relevant_count` are drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant: Option<Vec<usize>>,
    #[serde(default)]
    pub relevant_count: usize,
    pub effect: Effect,
    pub noise_sd: f64,
    /// Defaults to the experiment seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Cohort labels assigned to rows in turn: row `i` gets
    /// `cohorts[i % len]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cohorts: Vec<String>,
}

/// One search to run. Accepts either a bare name or an object with a
/// `name` field and per-strategy settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum StrategySpec {
    #[serde(alias = "forward")]
    GreedyForward {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_no_improve: Option<u64>,
    },
    #[serde(alias = "backward")]
    GreedyBackward {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_no_improve: Option<u64>,
    },
    #[serde(alias = "bfs")]
    GreedyBfs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        patience: Option<u64>,
    },
    #[serde(alias = "bfsx")]
    BfsCrossover {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        patience: Option<u64>,
    },
    #[serde(alias = "ga")]
    Genetic {
        #[serde(flatten)]
        params: GaParams,
    },
    Exhaustive {},
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::GreedyForward { .. } => "greedy_forward",
            StrategySpec::GreedyBackward { .. } => "greedy_backward",
            StrategySpec::GreedyBfs { .. } => "greedy_bfs",
            StrategySpec::BfsCrossover { .. } => "bfs_crossover",
            StrategySpec::Genetic { .. } => "genetic",
            StrategySpec::Exhaustive {} => "exhaustive",
        }
    }

    /// Parses a bare strategy name such as `bfs_crossover` or `ga`.
    pub fn from_name(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "name": name.trim() }))
            .map_err(|_| CliError::Invalid(format!("unknown strategy `{name}`")))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StrategyEntry {
    Name(String),
    Spec(StrategySpec),
}

fn strategies_from_entries<'de, D>(d: D) -> std::result::Result<Vec<StrategySpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Vec::<StrategyEntry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            StrategyEntry::Name(n) => StrategySpec::from_name(&n).map_err(serde::de::Error::custom),
            StrategyEntry::Spec(s) => Ok(s),
        })
        .collect()
}

/// What to do with a search that stops on the evaluation budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetPolicy {
    /// Mark the strategy failed.
    #[default]
    Fail,
    /// Keep the best subset found so far.
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Keep only rows with this cohort label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<String>,
    #[serde(deserialize_with = "strategies_from_entries")]
    pub strategies: Vec<StrategySpec>,
    #[serde(default)]
    pub gbt: GbtParams,
    #[serde(default)]
    pub cv: CvParams,
    /// Depths compared once on the full feature set; empty keeps `gbt.max_depth`.
    #[serde(default = "default_depth_grid")]
    pub depth_grid: Vec<usize>,
    /// Score every subset at its own best depth from `depth_grid` instead of
    /// fixing one depth up front.
    #[serde(default)]
    pub depth_per_subset: bool,
    #[serde(default = "default_patience")]
    pub patience: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub budget_policy: BudgetPolicy,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Seeds the folds, the genetic algorithm and synthetic data.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Run strategies concurrently; each keeps its own score cache.
    #[serde(default)]
    pub parallel_strategies: bool,
    /// Cap the genetic algorithm at the number of subsets BFS with
    /// crossover scored in the same run.
    #[serde(default)]
    pub ga_match_bfsx_budget: bool,
}

fn default_depth_grid() -> Vec<usize> {
    DEFAULT_DEPTH_GRID.to_vec()
}

fn default_patience() -> u64 {
    DEFAULT_PATIENCE
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub patience: Option<u64>,
    pub budget: Option<u64>,
    pub strategies: Option<Vec<StrategySpec>>,
    pub target: Option<String>,
    pub cohort: Option<String>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the dataset and strategies.
    pub fn new(dataset: DatasetSource, strategies: Vec<StrategySpec>) -> Self {
        Self {
            dataset,
            cohort: None,
            strategies,
            gbt: GbtParams::default(),
            cv: CvParams::default(),
            depth_grid: default_depth_grid(),
            depth_per_subset: false,
            patience: DEFAULT_PATIENCE,
            budget: DEFAULT_BUDGET,
            budget_policy: BudgetPolicy::default(),
            out_dir: default_out_dir(),
            seed: 0,
            threads: None,
            parallel_strategies: false,
            ga_match_bfsx_budget: false,
        }
    }

    /// Reads a config file. Relative dataset paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::Csv { path, meta, .. } => {
                fix(path);
                if let Some(m) = meta {
                    fix(m);
                }
            }
            DatasetSource::Voxel { path, targets, .. } => {
                fix(path);
                fix(targets);
            }
            DatasetSource::Synth(_) => {}
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(p) = o.patience {
            self.patience = p;
        }
        if let Some(b) = o.budget {
            self.budget = b;
        }
        if let Some(s) = &o.strategies {
            self.strategies = s.clone();
        }
        if let Some(t) = &o.target {
            match &mut self.dataset {
                DatasetSource::Csv { target, .. } | DatasetSource::Voxel { target, .. } => {
                    *target = Some(t.clone());
                }
                DatasetSource::Synth(_) => {}
            }
        }
        if let Some(c) = &o.cohort {
            self.cohort = Some(c.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(CliError::Invalid("at least one strategy is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.strategies {
            if !seen.insert(s.name()) {
                return Err(CliError::Invalid(format!("strategy `{}` listed twice", s.name())));
            }
            if let StrategySpec::Genetic { params } = s {
                params.validate()?;
            }
        }
        if self.patience == 0 {
            return Err(CliError::Invalid("patience must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(CliError::Invalid("budget must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Invalid("threads must be at least 1".into()));
        }
        self.gbt.validate()?;
        self.cv.validate()?;
        if self.depth_per_subset && self.depth_grid.is_empty() {
            return Err(CliError::Invalid("depth_per_subset needs a depth grid".into()));
        }
        for &d in &self.depth_grid {
            GbtParams {
                max_depth: d,
                ..self.gbt
            }
            .validate()?;
        }
        let must_exist = |p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::Invalid(format!("{}: file not found", p.display())))
            }
        };
        match &self.dataset {
            DatasetSource::Csv { path, target, meta, .. } => {
                must_exist(path)?;
                if let Some(m) = meta {
                    must_exist(m)?;
                }
                if target.is_none() {
                    return Err(CliError::Invalid("csv dataset needs a target column".into()));
                }
            }
            DatasetSource::Voxel { path, targets, target } => {
                must_exist(path)?;
                must_exist(targets)?;
                if target.is_none() {
                    return Err(CliError::Invalid("voxel dataset needs a target column".into()));
                }
            }
            DatasetSource::Synth(s) => {
                if s.relevant.is_none() && s.relevant_count > s.m {
                    return Err(CliError::Invalid("relevant_count exceeds m".into()));
                }
            }
        }
        Ok(())
    }

    /// Patience a best-first strategy actually uses.
    pub fn patience_for(&self, spec: &StrategySpec) -> u64 {
        match spec {
            StrategySpec::GreedyBfs { patience } | StrategySpec::BfsCrossover { patience } => {
                patience.unwrap_or(self.patience)
            }
            _ => self.patience,
        }
    }
}

/// Parses a patience value; `inf` means never stop on patience.
pub fn parse_patience(s: &str) -> std::result::Result<u64, String> {
    match s.trim() {
        "inf" | "infinite" | "infinity" => Ok(INFINITE_PATIENCE),
        t => t.parse().map_err(|e| format!("invalid patience `{t}`: {e}")),
    }
}

/// Parses a comma-separated strategy list.
pub fn parse_strategies(s: &str) -> Result<Vec<StrategySpec>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(StrategySpec::from_name)
        .collect()
}

/// Sidecar metadata path for a feature CSV: `data.csv` -> `data.meta.json`.
pub fn meta_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}
