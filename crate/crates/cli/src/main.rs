//! `jitdp`: extract change features, evaluate defect predictors and compare
//! feature sets from the command line.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jitdp::dataset::{ScaleOn, Scheme};
use jitdp::features::FeatureSet;
use jitdp::miner::MinerConfig;
use jitdp::pipeline::{EvalConfig, ModelKind};

use commands::{EvalOptions, ExtractOptions, PrSource};
use config::{parse_with, pick, RunConfig};
use error::{usage, CliError, CliResult, StageExt};

#[derive(Parser)]
#[command(name = "jitdp", version, about = "Just-in-time defect prediction toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for every written file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for fold evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a repository and write the feature dataset.
    Extract(ExtractArgs),
    /// Train and evaluate models; writes per-fold metrics and a report.
    Evaluate(EvalArgs),
    /// Paired significance and effect-size tests between metric reports.
    Compare(CompareArgs),
    /// Feature importance groups over repeated cross-validation.
    Importance(EvalArgs),
    /// Build the synthetic fixture repository, PR records and labels.
    FixtureGen,
}

#[derive(Args)]
struct ExtractArgs {
    /// Path to the git repository to mine
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Label file (hash,label per line).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory of offline pull-request records.
    #[arg(long, conflicts_with = "fetch")]
    fixtures: Option<PathBuf>,
    /// Fetch pull requests of `owner/name` from the forge (token from FORGE_TOKEN).
    #[arg(long)]
    fetch: Option<String>,
    /// Pull-request cache root; defaults to `<out>/cache`.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Leave merge commits out of the dataset
    #[arg(long)]
    skip_merges: bool,
    /// Let git pair renamed files instead of reporting delete plus add
    #[arg(long)]
    detect_renames: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset CSV; defaults to `<out>/dataset.csv`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Project name used in reports; defaults to the dataset file stem.
    #[arg(long)]
    project: Option<String>,
    /// Feature sets: sota, workflow, path, all (comma separated).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// cv, short-term or long-term.
    #[arg(long)]
    scheme: Option<String>,
    /// rf, ealr, cbs+, lt or churn.
    #[arg(long)]
    model: Option<String>,
    /// Seed for splits, sampling and forests (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Effort budget as a fraction of total churn.
    #[arg(long)]
    budget: Option<f64>,
    /// Drop the last frame of commits whose labels may be incomplete.
    #[arg(long)]
    censor: bool,
    /// Fit standardization on `train` or `test`.
    #[arg(long)]
    scale_on: Option<String>,
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    folds: Option<usize>,
    /// Cross-validation repetitions [default: 10]
    #[arg(long)]
    repeats: Option<usize>,
    /// Trees per forest [default: 100]
    #[arg(long)]
    trees: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Metrics CSVs; the first group is the baseline, every other group a treatment.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
}

fn extract_options(a: ExtractArgs, cfg: &RunConfig, out: &Path) -> CliResult<ExtractOptions> {
    let repo = pick(a.repo, &cfg.repo).ok_or_else(|| usage("missing --repo"))?;
    let labels = pick(a.labels, &cfg.labels).ok_or_else(|| usage("missing --labels"))?;
    let fixtures = pick(a.fixtures, &cfg.fixtures);
    let fetch = pick(a.fetch, &cfg.fetch);
    let prs = match (fixtures, fetch) {
        (Some(_), Some(_)) => return Err(usage("--fixtures and --fetch are mutually exclusive")),
        (Some(dir), None) => PrSource::Fixtures(dir),
        (None, Some(repo_id)) => PrSource::Fetch {
            repo_id,
            cache: pick(a.cache, &cfg.cache).unwrap_or_else(|| out.join("cache")),
        },
        (None, None) => PrSource::None,
    };
    let miner = MinerConfig {
        skip_merges: a.skip_merges || cfg.skip_merges.unwrap_or(false),
        detect_renames: a.detect_renames || cfg.detect_renames.unwrap_or(false),
        ..MinerConfig::default()
    };
    Ok(ExtractOptions {
        repo,
        labels,
        prs,
        miner,
    })
}

fn eval_options(a: EvalArgs, cfg: &RunConfig, out: &Path, importance: bool) -> CliResult<EvalOptions> {
    let dataset = pick(a.dataset, &cfg.dataset).unwrap_or_else(|| out.join("dataset.csv"));
    let project = pick(a.project, &cfg.project).unwrap_or_else(|| {
        dataset
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("project")
            .to_owned()
    });
    if project.contains([',', '"', '\n']) {
        return Err(usage("--project must not contain commas, quotes or newlines"));
    }
    let features = pick(a.features, &cfg.features).unwrap_or_else(|| vec!["all".into()]);
    let mut sets = Vec::new();
    for f in &features {
        let set: FeatureSet = parse_with("--features", f)?;
        if !sets.contains(&set) {
            sets.push(set);
        }
    }
    if importance && sets.len() > 1 {
        return Err(usage("importance takes a single feature set"));
    }
    let defaults = EvalConfig::default();
    let scheme: Scheme = match pick(a.scheme, &cfg.scheme) {
        Some(s) if importance && s != "cv" => return Err(usage("importance runs under --scheme cv only")),
        Some(s) => parse_with("--scheme", &s)?,
        None => Scheme::Cv,
    };
    let model: ModelKind = match pick(a.model, &cfg.model) {
        Some(m) if importance && m != "rf" => return Err(usage("importance needs --model rf")),
        Some(m) => parse_with("--model", &m)?,
        None => ModelKind::Rf,
    };
    let scale_on: ScaleOn = match pick(a.scale_on, &cfg.scale_on) {
        Some(s) => parse_with("--scale-on", &s)?,
        None => ScaleOn::Train,
    };
    let seed = pick(a.seed, &cfg.seed).ok_or_else(|| usage("missing --seed (required for stochastic commands)"))?;
    let budget = pick(a.budget, &cfg.budget).unwrap_or(defaults.budget);
    if !(budget > 0.0 && budget <= 1.0) {
        return Err(usage("--budget must be in (0, 1]"));
    }
    let positive = |flag: &str, v: Option<usize>, d: usize| match v.unwrap_or(d) {
        0 => Err(usage(format!("{flag} must be positive"))),
        n => Ok(n),
    };
    Ok(EvalOptions {
        dataset,
        project,
        sets,
        config: EvalConfig {
            feature_set: FeatureSet::All,
            scheme,
            model,
            seed,
            budget,
            censor: a.censor || cfg.censor.unwrap_or(false),
            scale_on,
            folds: positive("--folds", pick(a.folds, &cfg.folds), defaults.folds)?,
            repeats: positive("--repeats", pick(a.repeats, &cfg.repeats), defaults.repeats)?,
            trees: positive("--trees", pick(a.trees, &cfg.trees), defaults.trees)?,
        },
    })
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = pick(cli.out, &cfg.out).unwrap_or_else(|| PathBuf::from("."));
    let jobs = pick(cli.jobs, &cfg.jobs);
    let command = match cli.command {
        Command::Extract(a) => {
            let opts = extract_options(a, &cfg, &out)?;
            return commands::cmd_extract(&opts, &out);
        }
        Command::Compare(a) => return commands::cmd_compare(&a.reports, &out),
        Command::FixtureGen => {
            let f = jitdp::fixture::generate(&out).stage("fixture-gen")?;
            return Ok(vec![f.repo, f.prs, f.labels]);
        }
        other => other,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    match command {
        Command::Evaluate(a) => {
            let opts = eval_options(a, &cfg, &out, false)?;
            pool.install(|| commands::cmd_evaluate(&opts, &out))
        }
        Command::Importance(a) => {
            let opts = eval_options(a, &cfg, &out, true)?;
            pool.install(|| commands::cmd_importance(&opts, &out))
        }
        _ => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
