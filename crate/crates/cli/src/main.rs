use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featsel::featurize::{build_feature_table, load_targets, save_csv, Effect, GroupedSamples, SynthSpec};
use featsel::search::EXHAUSTIVE_MAX_FEATURES;
use featsel::{DatasetMeta, FeatureTag};
use featsel_cli::config::{meta_path_for, parse_patience, parse_strategies};
use featsel_cli::{
    load_dataset, run_experiment, tags_from_names, CliError, ExperimentConfig, FrequencyReport, Overrides, Result,
    StrategySpec,
};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "featsel",
    version,
    about = "Wrapper feature selection over the subset lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured strategy and write the comparison.
    Run(RunArgs),
    /// Write a synthetic dataset with planted relevant features.
    Synth(SynthArgs),
    /// Turn a long-format voxel CSV into a feature table.
    Featurize(FeaturizeArgs),
    /// Count metrics, regions and statistics among selected features.
    Freq(FreqArgs),
    /// Exhaustive search over every subset (at most 20 features).
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Patience for the best-first strategies; `inf` disables it.
    #[arg(long, value_parser = parse_patience)]
    patience: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated strategy names, e.g. `forward,bfs,bfsx`.
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    cohort: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            patience: self.patience,
            budget: self.budget,
            strategies: self.strategies.as_deref().map(parse_strategies).transpose()?,
            target: self.target.clone(),
            cohort: self.cohort.clone(),
            threads: self.threads,
        });
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 154)]
    n: usize,
    #[arg(long, default_value_t = 280)]
    m: usize,
    /// Number of planted features, drawn at random.
    #[arg(long, default_value_t = 8)]
    relevant: usize,
    #[arg(long, value_enum, default_value = "interaction")]
    effect: EffectArg,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature CSV to write; metadata goes to `<stem>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EffectArg {
    Linear,
    Interaction,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Long-format CSV: subject_id, region, metric, value.
    #[arg(long)]
    voxels: PathBuf,
    /// CSV with a subject_id column and one column per target.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FreqArgs {
    /// report.json files whose best subsets are counted.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Metadata sidecar holding the feature tags.
    #[arg(long, conflicts_with = "csv")]
    meta: Option<PathBuf>,
    /// Feature CSV; tags come from its sidecar or its column names.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Target column of `--csv`, excluded from the features.
    #[arg(long, requires = "csv")]
    target: Option<String>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but something in it failed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run(args) => run(args.config()?),
        Command::Oracle(args) => {
            let mut cfg = args.config()?;
            cfg.validate()?;
            let (ds, _) = load_dataset(&cfg)?;
            if ds.n_features() > EXHAUSTIVE_MAX_FEATURES {
                return Err(CliError::Invalid(format!(
                    "exhaustive search is limited to {EXHAUSTIVE_MAX_FEATURES} features, dataset has {}",
                    ds.n_features()
                )));
            }
            cfg.strategies = vec![StrategySpec::Exhaustive {}];
            run(cfg)
        }
        Command::Synth(args) => synth(&args),
        Command::Featurize(args) => featurize(&args),
        Command::Freq(args) => freq(&args),
    }
}

fn run(cfg: ExperimentConfig) -> Result<bool> {
    let res = run_experiment(&cfg)?;
    print!("{}", res.comparison.to_table(true));
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(!res.comparison.any_failed())
}

fn synth(args: &SynthArgs) -> Result<bool> {
    let effect = match args.effect {
        EffectArg::Linear => Effect::Linear,
        EffectArg::Interaction => Effect::Interaction,
    };
    let spec = SynthSpec::with_random_relevant(args.n, args.m, args.relevant, effect, args.noise_sd, args.seed)?;
    let ds = featsel::featurize::synth_dataset(&spec)?;
    write_table(&ds, &args.out, "target")?;
    println!(
        "wrote {} ({} x {})",
        args.out.display(),
        ds.n_samples(),
        ds.n_features()
    );
    Ok(true)
}

fn featurize(args: &FeaturizeArgs) -> Result<bool> {
    let grouped = GroupedSamples::load_voxel_csv(&args.voxels)?;
    let targets = load_targets(&args.targets, &args.target)?;
    let ds = build_feature_table(&grouped, &targets)?;
    write_table(&ds, &args.out, &args.target)?;
    println!(
        "wrote {} ({} x {})",
        args.out.display(),
        ds.n_samples(),
        ds.n_features()
    );
    Ok(true)
}

fn write_table(ds: &featsel::Dataset, out: &Path, target: &str) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_csv(ds, out, target)?;
    ds.meta.save(&meta_path_for(out))?;
    Ok(())
}

#[derive(Deserialize)]
struct ReportBest {
    best_features: Vec<usize>,
}

fn freq(args: &FreqArgs) -> Result<bool> {
    let tags = freq_tags(args)?;
    let mut selections = Vec::with_capacity(args.reports.len());
    for p in &args.reports {
        let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        let r: ReportBest = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: not a search report: {e}", p.display())))?;
        selections.push(r.best_features);
    }
    let report = FrequencyReport::from_selections(&tags, &selections)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_table());
    }
    Ok(true)
}

fn freq_tags(args: &FreqArgs) -> Result<Vec<FeatureTag>> {
    if let Some(m) = &args.meta {
        return DatasetMeta::load(m)?
            .tags
            .ok_or_else(|| CliError::Invalid(format!("{}: no feature tags", m.display())));
    }
    let Some(csv) = &args.csv else {
        return Err(CliError::Invalid("freq needs --meta or --csv".into()));
    };
    let sidecar = meta_path_for(csv);
    if sidecar.is_file() {
        if let Some(tags) = DatasetMeta::load(&sidecar)?.tags {
            return Ok(tags);
        }
    }
    let target = args
        .target
        .as_deref()
        .ok_or_else(|| CliError::Invalid("--csv without a tag sidecar needs --target".into()))?;
    let ds = featsel::featurize::load_csv(csv, target)?;
    tags_from_names(ds.feature_names())
}
