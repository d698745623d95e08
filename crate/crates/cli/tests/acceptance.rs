//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines come out in order; exits non-zero when any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use jitdp::ast::{parse, AstNode, Registry, MINILANG};
use jitdp::dataset::{downsample, log_transform, signed_log, split_cv, standardize, Dataset, ScaleOn};
use jitdp::eval::{
    bonferroni, cliffs_delta, cliffs_delta_naive, compare, confusion_metrics, effort_metrics,
    npsk_groups, wilcoxon_with, EffectClass, RankedEntry, RankedList, WilcoxonMethod,
};
use jitdp::features::{feature_names, read_labels, write_csv, FeatureSet, FeatureVector, Label};
use jitdp::fixture::{generate, random_pair};
use jitdp::forge::load_fixtures;
use jitdp::learner::{train_forest, ForestParams};
use jitdp::miner::MinerConfig;
use jitdp::pipeline::{evaluate, extract, fold_seed, EvalConfig};
use jitdp::treediff::{diff_trees, NodeRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GOLDEN: &str = include_str!("../../core/tests/golden/fixture.csv");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_extraction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let f = generate(dir.path()).map_err(|e| e.to_string())?;
    let prs = load_fixtures(&f.prs).map_err(|e| e.to_string())?;
    let labels = read_labels(&f.labels).map_err(|e| e.to_string())?;
    let (rows, report) = extract(&f.repo, &MinerConfig::default(), prs, Some(&labels), &Registry::default())
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut out = Vec::new();
    write_csv(&rows, &mut out).map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).map_err(|e| e.to_string())?;
    let header_cols = text.lines().next().unwrap_or("").split(',').count();
    check(header_cols == 2 + 51 + 1, format!("header has {header_cols} columns"))?;
    check(report.mined == 12, format!("{} commits mined", report.mined))?;
    check(text == GOLDEN, "CSV differs from the golden file")?;
    check(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("{} rows x 51 features byte-identical in {secs:.2} s", rows.len()))
}

fn mcc_oracle(tp: f64, fp: f64, fn_: f64, tn: f64) -> f64 {
    let d = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if d == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / d.sqrt()
    }
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        let pred: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let lab: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let count = |p: bool, l: bool| pred.iter().zip(&lab).filter(|(a, b)| **a == p && **b == l).count() as f64;
        let (tp, fp, fn_, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
        let p = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let r = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let got = confusion_metrics(&pred, &lab).map_err(|e| e.to_string())?;
        for (name, a, b) in [
            ("precision", got.precision, p),
            ("recall", got.recall, r),
            ("f1", got.f1, f1),
            ("mcc", got.mcc, mcc_oracle(tp, fp, fn_, tn)),
        ] {
            check((a - b).abs() <= 1e-12, format!("case {case}: {name} {a} vs {b}"))?;
        }

        let entries: Vec<RankedEntry> = (0..n)
            .map(|i| RankedEntry {
                hash: format!("{i:03}"),
                score: 0.0,
                effort: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(1..200) as f64 },
                is_defective: lab[i],
            })
            .collect();
        let budget = [0.2, 0.5, 1.0][case % 3];
        let ranking = RankedList { entries };
        let got = effort_metrics(&ranking, budget);
        let e = &ranking.entries;
        let total: f64 = e.iter().map(|x| x.effort).sum();
        // longest prefix whose effort fits, by trying every length
        let k = (0..=n)
            .filter(|&k| e[..k].iter().map(|x| x.effort).sum::<f64>() <= budget * total)
            .max()
            .unwrap_or(0);
        let found = e[..k].iter().filter(|x| x.is_defective).count() as f64;
        let defects = e.iter().filter(|x| x.is_defective).count() as f64;
        let rec = if defects == 0.0 { 0.0 } else { found / defects };
        let prec = if k == 0 { 0.0 } else { found / k as f64 };
        let f1 = if rec + prec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        let ifa = e.iter().take_while(|x| !x.is_defective).count();
        check(got.r_at_20 == rec, format!("case {case}: r@20 {} vs {rec}", got.r_at_20))?;
        check(got.f1_at_20 == f1, format!("case {case}: f1@20 {} vs {f1}", got.f1_at_20))?;
        check(got.pci_at_20 == k as f64 / n as f64, format!("case {case}: pci@20"))?;
        check(got.ifa == ifa, format!("case {case}: ifa {} vs {ifa}", got.ifa))?;

        let a: Vec<f64> = (0..rng.gen_range(1..=50)).map(|_| rng.gen_range(0..20) as f64 / 4.0).collect();
        let b: Vec<f64> = (0..rng.gen_range(1..=50)).map(|_| rng.gen_range(0..20) as f64 / 4.0).collect();
        let (fast, _) = cliffs_delta(&a, &b);
        let slow = cliffs_delta_naive(&a, &b);
        check(fast == slow, format!("case {case}: cliff's delta {fast} vs {slow}"))?;
    }
    Ok("1000 cases: confusion within 1e-12, effort metrics and Cliff's delta exact".into())
}

fn statistical_tests() -> Outcome {
    let d: Vec<f64> = (1..=5).map(f64::from).collect();
    let zeros = vec![0.0; 5];
    let p = wilcoxon_with(&d, &zeros, WilcoxonMethod::Exact).map_err(|e| e.to_string())?;
    check((p - 0.0625).abs() < 1e-12, format!("exact p for 1..5 is {p}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    for _ in 0..100 {
        let n = rng.gen_range(15..=20);
        let a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.15).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let exact = wilcoxon_with(&a, &b, WilcoxonMethod::Exact).map_err(|e| e.to_string())?;
        let normal = wilcoxon_with(&a, &b, WilcoxonMethod::Normal).map_err(|e| e.to_string())?;
        if (exact - normal).abs() > worst {
            worst = (exact - normal).abs();
            worst_case = format!("n = {n}: exact {exact:.6}, normal {normal:.6}");
        }
    }
    check(worst <= 0.01, format!("normal vs exact differ by {worst:.5} ({worst_case})"))?;

    let adj = bonferroni(&[0.02, 0.4, 1.0], 3);
    check((adj[0] - 0.06).abs() < 1e-12, format!("0.02 x 3 gave {}", adj[0]))?;
    check(adj[1] == 1.0 && adj[2] == 1.0, "Bonferroni does not clamp at 1")?;
    Ok(format!("exact p = {p}, max |normal - exact| = {worst:.4} over 100 cases, clamp ok"))
}

fn shapes<'a>(it: impl Iterator<Item = &'a NodeRef>) -> Vec<(String, Option<String>)> {
    let mut v: Vec<_> = it.map(|n| (n.kind.clone(), n.label.clone())).collect();
    v.sort();
    v
}

fn tree_diff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut edited = 0;
    for case in 0..1000 {
        let (a, b) = random_pair(&mut rng);
        let before: AstNode = parse(&a, MINILANG).map_err(|e| format!("case {case}: {e}"))?;
        let after: AstNode = parse(&b, MINILANG).map_err(|e| format!("case {case}: {e}"))?;
        check(diff_trees(&before, &before).is_empty(), format!("case {case}: diff(t, t) not empty"))?;
        let s = diff_trees(&before, &after);
        if !s.is_empty() {
            edited += 1;
        }
        check(
            before.size() - s.deletes.len() + s.adds.len() == after.size(),
            format!("case {case}: node count not conserved"),
        )?;
        let back = diff_trees(&after, &before);
        check(
            shapes(s.adds.iter().map(|e| &e.node)) == shapes(back.deletes.iter().map(|e| &e.node))
                && shapes(s.deletes.iter().map(|e| &e.node)) == shapes(back.adds.iter().map(|e| &e.node)),
            format!("case {case}: adds/deletes not mirrored"),
        )?;
    }
    Ok(format!("1000 pairs ({edited} with edits): identity, conservation and symmetry hold"))
}

fn row(hash: String, timestamp: i64, values: Vec<f64>, defective: bool) -> FeatureVector {
    FeatureVector {
        commit_hash: hash,
        timestamp,
        values,
        label: Some(if defective { Label::DefectInducing } else { Label::Clean }),
    }
}

/// 500 rows, 10 standard-normal features; the label is decided by the
/// first two.
fn informative_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..500)
        .map(|i| {
            let x: Vec<f64> = (0..10).map(|_| rng.sample(StandardNormal)).collect();
            let y = x[0] + x[1] > 0.0;
            row(format!("{i:04}"), i, x, y)
        })
        .collect();
    Dataset::new((0..10).map(|j| format!("x{j}")).collect(), rows).expect("valid synthetic data")
}

/// 10-fold CV with the evaluation pipeline's preprocessing; per-fold MCC
/// and importances.
fn forest_cv(ds: &Dataset, seed: u64, trees: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let plan = split_cv(ds, 10, 1, seed).map_err(|e| e.to_string())?;
    let mut mccs = Vec::new();
    let mut imps = Vec::new();
    for fold in &plan.folds {
        let s = fold_seed(seed, fold.id);
        let train = log_transform(&ds.subset(&fold.train));
        let test = log_transform(&ds.subset(&fold.test));
        let (train, test, _) = standardize(&train, &test, ScaleOn::Train).map_err(|e| e.to_string())?;
        let (train, _) = downsample(&train, s);
        let params = ForestParams {
            n_trees: trees,
            seed: s,
            ..Default::default()
        };
        let forest = train_forest(&train, &params).map_err(|e| e.to_string())?;
        let pred: Vec<bool> = forest
            .predict_dataset(&test)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| *p > 0.5)
            .collect();
        mccs.push(confusion_metrics(&pred, &test.labels()).map_err(|e| e.to_string())?.mcc);
        imps.push(forest.importance_vector());
    }
    Ok((mccs, imps))
}

fn forest() -> Outcome {
    let trees = 100;
    let mut all_mcc = Vec::new();
    let mut share_ok = 0;
    let mut group_ok = 0;
    let mut ahead_of_noise = 0;
    let mut min_share = f64::INFINITY;
    for rep in 0..100u64 {
        let ds = informative_dataset(1000 + rep);
        let (mccs, imps) = forest_cv(&ds, rep, trees)?;
        all_mcc.extend(mccs);
        let share = imps.iter().map(|v| v[0] + v[1]).sum::<f64>() / imps.len() as f64;
        min_share = min_share.min(share);
        if share > 0.6 {
            share_ok += 1;
        }
        let dists: Vec<(String, Vec<f64>)> = (0..10)
            .map(|j| (format!("x{j}"), imps.iter().map(|v| v[j]).collect()))
            .collect();
        let groups = npsk_groups(&dists);
        let top: BTreeSet<&str> = groups.groups[0].members.iter().map(String::as_str).collect();
        if top == BTreeSet::from(["x0", "x1"]) {
            group_ok += 1;
        }
        let rank = |f: &str| groups.rank_of(f).unwrap_or(usize::MAX);
        let worst_informative = rank("x0").max(rank("x1"));
        if (2..10).all(|j| rank(&format!("x{j}")) > worst_informative) {
            ahead_of_noise += 1;
        }
    }
    let mean_mcc = all_mcc.iter().sum::<f64>() / all_mcc.len() as f64;
    let summary = format!(
        "mean 10-fold MCC {mean_mcc:.3}; MDI share > 0.6 in {share_ok}/100 (min {min_share:.3}); \
         informative pair alone in NPSK group 1 in {group_ok}/100 \
         (pair in groups ranked above every noise feature in {ahead_of_noise}/100)"
    );
    check(mean_mcc >= 0.9 && share_ok >= 95 && group_ok >= 95, summary.clone())?;
    Ok(summary)
}

/// Commits whose defectiveness needs both a large size and many added AST
/// nodes; every other feature is noise.
fn joint_signal_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = feature_names();
    let col = |n: &str| names.iter().position(|x| *x == n).expect("known feature");
    let (la, ld, lt, asta) = (col("LA"), col("LD"), col("LT"), col("ASTA"));
    let rows = (0..400)
        .map(|i| {
            let mut v: Vec<f64> = (0..names.len()).map(|_| rng.gen_range(0..20) as f64).collect();
            v[la] = rng.gen_range(1..200) as f64;
            v[ld] = rng.gen_range(0..50) as f64;
            v[lt] = rng.gen_range(0..500) as f64;
            v[asta] = rng.gen_range(0..60) as f64;
            let mut y = v[la] > 60.0 && v[asta] > 20.0;
            if rng.gen_bool(0.05) {
                y = !y;
            }
            row(format!("{i:04}"), 1_600_000_000 + 3600 * i as i64, v, y)
        })
        .collect();
    Dataset::new(names.into_iter().map(String::from).collect(), rows).expect("valid synthetic data")
}

fn rq1_shape() -> Outcome {
    let ds = joint_signal_dataset(6);
    let run = |set| {
        let cfg = EvalConfig {
            feature_set: set,
            seed: 6,
            ..EvalConfig::default()
        };
        evaluate(&ds, &cfg).map(|e| e.metric("mcc")).map_err(|e| e.to_string())
    };
    let sota = run(FeatureSet::Sota)?;
    let all = run(FeatureSet::All)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // adjusted as if the three novel configurations were all compared
    let stat = compare(&all, &sota, 3).map_err(|e| e.to_string())?;
    let gain = mean(&all) - mean(&sota);
    let summary = format!(
        "MCC all {:.3} vs sota {:.3} (+{gain:.3}), p_adj {:.2e}, delta {:.3} ({})",
        mean(&all),
        mean(&sota),
        stat.p_adjusted,
        stat.delta,
        stat.effect_class.as_str()
    );
    check(
        gain >= 0.05 && stat.p_adjusted < 0.05 && matches!(stat.effect_class, EffectClass::M | EffectClass::L),
        summary.clone(),
    )?;
    Ok(summary)
}

fn jitdp(args: &[&str], cwd: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_jitdp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "jitdp {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

const METRICS: [&str; 8] = ["precision", "recall", "f1", "mcc", "r_at_20", "f1_at_20", "pci_at_20", "ifa"];

fn validate_metrics_csv(path: &Path, scheme: &str) -> Result<usize, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    check(lines.next() == Some("project,scheme,feature_set,fold,metric,value"), "bad metrics header")?;
    let mut n = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        check(f.len() == 6, format!("bad row `{l}`"))?;
        check(f[1] == scheme && f[2] == "all", format!("bad row `{l}`"))?;
        check(f[3].parse::<usize>().is_ok(), format!("bad fold in `{l}`"))?;
        check(METRICS.contains(&f[4]), format!("unknown metric in `{l}`"))?;
        let v: f64 = f[5].parse().map_err(|_| format!("bad value in `{l}`"))?;
        check(v.is_finite(), format!("non-finite value in `{l}`"))?;
        n += 1;
    }
    check(n > 0 && n % METRICS.len() == 0, format!("{n} metric rows"))?;
    Ok(n / METRICS.len())
}

fn pipeline_smoke() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    jitdp(&["fixture-gen", "--out", "fx"], root)?;
    let mut produced: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    let mut folds = Vec::new();
    for run in ["a", "b"] {
        jitdp(
            &["extract", "--out", run, "--repo", "fx/repo", "--fixtures", "fx/prs", "--labels", "fx/labels.csv"],
            root,
        )?;
        let ds = fs::read_to_string(root.join(run).join("dataset.csv")).map_err(|e| e.to_string())?;
        check(ds == GOLDEN, "CLI dataset differs from the golden file")?;
        let mut files = Vec::new();
        for (scheme, extra) in [
            ("cv", vec!["--folds", "3", "--repeats", "2"]),
            ("short-term", vec![]),
            ("long-term", vec![]),
        ] {
            let mut args = vec!["evaluate", "--out", run, "--seed", "11", "--trees", "25", "--scheme", scheme];
            args.extend(extra);
            jitdp(&args, root)?;
            let csv = root.join(run).join(format!("metrics-{scheme}-rf.csv"));
            let md = root.join(run).join(format!("report-{scheme}-rf.md"));
            let n = validate_metrics_csv(&csv, scheme)?;
            let md_text = fs::read_to_string(&md).map_err(|e| e.to_string())?;
            check(
                md_text.starts_with("# Evaluation") && md_text.contains("| metric | mean | std |"),
                format!("{} is not a report", md.display()),
            )?;
            if run == "a" {
                folds.push(format!("{scheme} {n}"));
            }
            for p in [csv, md] {
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                files.push((name, fs::read(&p).map_err(|e| e.to_string())?));
            }
        }
        produced.push(files);
    }
    check(produced[0] == produced[1], "two seeded runs differ")?;
    Ok(format!("exit 0 for cv/short-term/long-term (folds: {}); reruns byte-identical", folds.join(", ")))
}

fn preprocessing() -> Outcome {
    let examples = [(0.0, 0.0), (std::f64::consts::E - 1.0, 1.0), (-5.0, -(6f64.ln()))];
    for (x, want) in examples {
        check((signed_log(x) - want).abs() < 1e-12, format!("log({x}) = {}", signed_log(x)))?;
    }
    let ds = joint_signal_dataset(8);
    let fundiff = ds.column("FUNDIFF").map_err(|e| e.to_string())?;
    let mut neg = ds.clone();
    neg.rows[0].values[fundiff] = -5.0;
    let logged = log_transform(&neg);
    check((logged.rows[0].values[fundiff] + 6f64.ln()).abs() < 1e-12, "dataset log of FUNDIFF -5")?;

    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    let mut balanced = 0;
    let plan = split_cv(&ds, 10, 1, 8).map_err(|e| e.to_string())?;
    for fold in &plan.folds {
        let train = log_transform(&ds.subset(&fold.train));
        let test = log_transform(&ds.subset(&fold.test));
        let (scaled, _, _) = standardize(&train, &test, ScaleOn::Train).map_err(|e| e.to_string())?;
        let n = scaled.len() as f64;
        for j in 0..scaled.feature_names.len() {
            let raw: Vec<f64> = train.rows.iter().map(|r| r.values[j]).collect();
            if raw.iter().all(|v| *v == raw[0]) {
                continue;
            }
            let col: Vec<f64> = scaled.rows.iter().map(|r| r.values[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            worst_mean = worst_mean.max(mean.abs());
            worst_var = worst_var.max((var - 1.0).abs());
        }
        for s in 0..10 {
            let (d, _) = downsample(&scaled, fold_seed(s, fold.id));
            let pos = d.positives();
            if pos * 2 == d.len() && pos == scaled.positives().min(scaled.len() - scaled.positives()) {
                balanced += 1;
            }
        }
    }
    check(worst_mean < 1e-9 && worst_var < 1e-9, format!("|mean| {worst_mean:e}, |var-1| {worst_var:e}"))?;
    check(balanced == 100, format!("{balanced}/100 downsampled sets balanced"))?;
    Ok(format!(
        "max |mean| {worst_mean:.1e}, max |var-1| {worst_var:.1e}; 100/100 downsamples balanced; 3 log examples"
    ))
}

fn main() {
    // libtest flags such as --nocapture or filters are accepted and ignored
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden extraction", golden_extraction),
        ("metric oracles", metric_oracles),
        ("statistical tests", statistical_tests),
        ("tree diff properties", tree_diff),
        ("forest recovers informative features", forest),
        ("ALL beats SotA on joint signal", rq1_shape),
        ("pipeline smoke", pipeline_smoke),
        ("preprocessing invariants", preprocessing),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
