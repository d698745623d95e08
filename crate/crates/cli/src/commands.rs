use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use jitdp::ast::Registry;
use jitdp::dataset::Dataset;
use jitdp::eval::{
    compare, comparison_markdown, metrics_csv, npsk_groups, stars, Comparison, ImportanceGroups,
    MetricRow,
};
use jitdp::features::{format_g6, read_labels, write_csv, FeatureSet};
use jitdp::forge::{fetch_pull_requests, load_fixtures, Cache, ForgeClient, PullRequestRecord};
use jitdp::miner::MinerConfig;
use jitdp::pipeline::{evaluate, extract, importance_distributions, EvalConfig, Evaluation};

use crate::error::{usage, CliError, CliResult, StageExt};

pub enum PrSource {
    None,
    Fixtures(PathBuf),
    Fetch { repo_id: String, cache: PathBuf },
}

pub struct ExtractOptions {
    pub repo: PathBuf,
    pub labels: PathBuf,
    pub prs: PrSource,
    pub miner: MinerConfig,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Mines, ingests PR data and writes `dataset.csv` plus `extract-summary.json`.
pub fn cmd_extract(opts: &ExtractOptions, out: &Path) -> CliResult<Vec<PathBuf>> {
    if !opts.labels.is_file() {
        return Err(usage(format!("--labels: no such file {}", opts.labels.display())));
    }
    let labels = read_labels(&opts.labels).map_err(|e| usage(format!("--labels: {e}")))?;
    let prs: Vec<PullRequestRecord> = match &opts.prs {
        PrSource::None => Vec::new(),
        PrSource::Fixtures(dir) => {
            if !dir.is_dir() {
                return Err(usage(format!("--fixtures: no such directory {}", dir.display())));
            }
            load_fixtures(dir).stage("forge")?
        }
        PrSource::Fetch { repo_id, cache } => {
            let client = ForgeClient::from_env();
            let mut cache = Cache::open(cache, repo_id).stage("forge")?;
            let (prs, report) = fetch_pull_requests(&client, repo_id, &mut cache).stage("forge")?;
            for w in &report.warnings {
                log::warn!("{w}");
            }
            log::info!(
                "fetched {} pull requests ({} list requests, {} cached)",
                prs.len(),
                report.list_requests,
                report.cached_records
            );
            prs
        }
    };
    let (rows, report) = extract(&opts.repo, &opts.miner, prs, Some(&labels), &Registry::default()).stage("extract")?;

    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).stage("write")?;
    let dataset = out.join("dataset.csv");
    write_file(&dataset, &String::from_utf8(csv).expect("csv is utf-8"))?;

    let mut summary = serde_json::to_value(&report).expect("report serializes");
    summary["pr_match_rate"] = serde_json::json!(report.pr_match_rate());
    let summary_path = out.join("extract-summary.json");
    write_file(&summary_path, &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;

    eprintln!(
        "mined {} commits, {} outliers removed, {} rows, {} parse failures, PR match rate {:.3}",
        report.mined,
        report.outliers_removed,
        report.extraction.rows,
        report.extraction.parse_failures,
        report.pr_match_rate()
    );
    Ok(vec![dataset, summary_path])
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    if !path.is_file() {
        return Err(usage(format!("--dataset: no such file {}", path.display())));
    }
    Dataset::load(path).stage("dataset")
}

pub struct EvalOptions {
    pub dataset: PathBuf,
    pub project: String,
    pub sets: Vec<FeatureSet>,
    pub config: EvalConfig,
}

fn file_tag(cfg: &EvalConfig) -> String {
    format!("{}-{}", cfg.scheme.as_str(), cfg.model.as_str().replace('+', "plus"))
}

/// Evaluates every selected feature set and writes the per-fold metrics CSV
/// and a markdown summary.
pub fn cmd_evaluate(opts: &EvalOptions, out: &Path) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(&opts.dataset)?;
    let cfg = &opts.config;
    let mut rows = Vec::new();
    let mut md = format!(
        "# Evaluation: {}\n\nscheme: {}, model: {}, seed: {}, budget: {}\n",
        opts.project,
        cfg.scheme.as_str(),
        cfg.model.as_str(),
        cfg.seed,
        format_g6(cfg.budget)
    );
    for &set in &opts.sets {
        let run = EvalConfig {
            feature_set: set,
            ..cfg.clone()
        };
        let eval = evaluate(&ds, &run).stage("evaluate")?;
        for f in &eval.folds {
            for (metric, value) in f.metrics.values() {
                rows.push(MetricRow {
                    project: opts.project.clone(),
                    scheme: cfg.scheme.as_str().into(),
                    feature_set: set.as_str().into(),
                    fold: f.fold,
                    metric: metric.into(),
                    value,
                });
            }
        }
        md.push_str(&evaluation_markdown(set, &eval));
    }
    let tag = file_tag(cfg);
    let csv_path = out.join(format!("metrics-{tag}.csv"));
    let md_path = out.join(format!("report-{tag}.md"));
    write_file(&csv_path, &metrics_csv(&rows))?;
    write_file(&md_path, &md)?;
    Ok(vec![csv_path, md_path])
}

fn evaluation_markdown(set: FeatureSet, eval: &Evaluation) -> String {
    let warnings: usize = eval.folds.iter().map(|f| f.warnings.len()).sum::<usize>() + eval.plan.warnings.len();
    let mut md = format!(
        "\n## {}\n\nfolds: {}, warnings: {}\n\n| metric | mean | std |\n|---|---:|---:|\n",
        set.as_str(),
        eval.folds.len(),
        warnings
    );
    for (name, mean, std) in eval.summary() {
        let _ = writeln!(md, "| {name} | {mean:.4} | {std:.4} |");
    }
    md
}

/// Per-fold values of one report group, metrics in report order.
type GroupValues = Vec<(String, BTreeMap<usize, f64>)>;

fn folds_of<'a>(g: &'a mut GroupValues, metric: &str) -> &'a mut BTreeMap<usize, f64> {
    let i = match g.iter().position(|(m, _)| m == metric) {
        Some(i) => i,
        None => {
            g.push((metric.to_owned(), BTreeMap::new()));
            g.len() - 1
        }
    };
    &mut g[i].1
}

#[derive(serde::Deserialize)]
struct CsvMetric {
    project: String,
    scheme: String,
    feature_set: String,
    fold: usize,
    metric: String,
    value: f64,
}

/// Reads metrics CSVs into groups keyed by `(file, project, scheme,
/// feature_set)`, in order of first appearance.
fn read_groups(paths: &[PathBuf]) -> CliResult<Vec<(String, GroupValues)>> {
    let mut keys: Vec<(usize, String, String, String)> = Vec::new();
    let mut groups: Vec<GroupValues> = Vec::new();
    for (file, path) in paths.iter().enumerate() {
        if !path.is_file() {
            return Err(usage(format!("no such report {}", path.display())));
        }
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        for rec in reader.deserialize::<CsvMetric>() {
            let r = rec.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let key = (file, r.project, r.scheme, r.feature_set);
            let i = match keys.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    keys.push(key);
                    groups.push(Vec::new());
                    keys.len() - 1
                }
            };
            folds_of(&mut groups[i], &r.metric).insert(r.fold, r.value);
        }
    }
    let stem = |i: usize| {
        paths[i]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mut labels: Vec<String> = Vec::new();
    for (n, (file, _, scheme, set)) in keys.iter().enumerate() {
        let mut label = set.clone();
        if keys.iter().filter(|k| k.3 == *set).count() > 1 {
            label = format!("{}:{scheme}:{set}", stem(*file));
        }
        if labels.contains(&label) {
            label = format!("{label}#{n}");
        }
        labels.push(label);
    }
    Ok(labels.into_iter().zip(groups).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Compares every treatment group against the first group of the first
/// report. Bonferroni correction uses the number of treatments.
pub fn cmd_compare(reports: &[PathBuf], out: &Path) -> CliResult<Vec<PathBuf>> {
    let groups = read_groups(reports)?;
    let Some(((base_name, base), treatments)) = groups.split_first() else {
        return Err(usage("compare needs at least one non-empty report"));
    };
    if treatments.is_empty() {
        return Err(usage("compare needs a treatment besides the baseline"));
    }
    let m = treatments.len();
    let mut csv = String::from("baseline,treatment,metric,baseline_mean,treatment_mean,p_raw,p_adjusted,sig,delta,effect\n");
    let mut md = format!("# Comparison against {base_name}\n");
    for (name, values) in treatments {
        let mut rows = Vec::new();
        for (metric, base_folds) in base {
            let Some((_, cand_folds)) = values.iter().find(|(m, _)| m == metric) else { continue };
            if !base_folds.keys().eq(cand_folds.keys()) {
                return Err(CliError::Runtime(format!(
                    "fold mismatch between {base_name} and {name} on {metric}"
                )));
            }
            let b: Vec<f64> = base_folds.values().copied().collect();
            let c: Vec<f64> = cand_folds.values().copied().collect();
            let stat = compare(&c, &b, m).stage("compare")?;
            let cmp = Comparison {
                metric: metric.clone(),
                baseline: mean(&b),
                candidate: mean(&c),
                stat,
            };
            let _ = writeln!(
                csv,
                "{base_name},{name},{metric},{},{},{},{},{},{},{}",
                format_g6(cmp.baseline),
                format_g6(cmp.candidate),
                format_g6(cmp.stat.p_raw),
                format_g6(cmp.stat.p_adjusted),
                stars(cmp.stat.p_adjusted),
                format_g6(cmp.stat.delta),
                cmp.stat.effect_class.as_str()
            );
            rows.push(cmp);
        }
        if rows.is_empty() {
            return Err(CliError::Runtime(format!("{base_name} and {name} share no metric")));
        }
        md.push('\n');
        md.push_str(&comparison_markdown(&format!("{name} vs {base_name}"), base_name, name, &rows));
    }
    let csv_path = out.join("compare.csv");
    let md_path = out.join("compare.md");
    write_file(&csv_path, &csv)?;
    write_file(&md_path, &md)?;
    Ok(vec![csv_path, md_path])
}

/// Forest importances over repeated cross-validation, grouped by NPSK.
pub fn cmd_importance(opts: &EvalOptions, out: &Path) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(&opts.dataset)?;
    let set = opts.sets.first().copied().unwrap_or(FeatureSet::All);
    let cfg = EvalConfig {
        feature_set: set,
        ..opts.config.clone()
    };
    let eval = evaluate(&ds, &cfg).stage("importance")?;
    let groups = npsk_groups(&importance_distributions(&eval));

    let mut csv = String::from("feature,group,median\n");
    for g in &groups.groups {
        for (name, med) in g.members.iter().zip(&g.medians) {
            let _ = writeln!(csv, "{name},{},{}", g.rank, format_g6(*med));
        }
    }
    let csv_path = out.join("importance.csv");
    let md_path = out.join("importance.md");
    write_file(&csv_path, &csv)?;
    write_file(&md_path, &top3_markdown(&opts.project, &groups))?;
    Ok(vec![csv_path, md_path])
}

/// Features of the three best groups with their group rank, alphabetically.
fn top3_markdown(project: &str, groups: &ImportanceGroups) -> String {
    let mut top: Vec<(&str, usize)> = groups
        .groups
        .iter()
        .filter(|g| g.rank <= 3)
        .flat_map(|g| g.members.iter().map(move |m| (m.as_str(), g.rank)))
        .collect();
    top.sort();
    let mut md = format!("# Most important features (top-3 groups)\n\n| feature | {project} |\n|---|:-:|\n");
    for (name, rank) in top {
        let _ = writeln!(md, "| {name} | {rank} |");
    }
    md
}
