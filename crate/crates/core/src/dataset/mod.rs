//! Labeled feature matrices, preprocessing and train/test splits.

mod split;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{feature_index, format_g6, FeatureSet, FeatureVector, Label, CSV_HEADER_PREFIX};
use crate::{Error, Result};

pub use split::{split_cv, split_time, Fold, Scheme, SplitPlan, TimeMode, FRAME_SECONDS};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    /// Preprocessing steps in the order applied.
    pub flags: Vec<String>,
}

/// Labeled rows sorted by commit hash, the canonical order every seeded
/// operation is defined over.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureVector>,
    pub provenance: Provenance,
}

/// Raw size measures kept aside for effort-aware ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effort {
    pub churn: f64,
    pub lt: f64,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, mut rows: Vec<FeatureVector>) -> Result<Self> {
        for r in &rows {
            if r.values.len() != feature_names.len() {
                return Err(Error::InvalidData(format!(
                    "row {} has {} values, expected {}",
                    r.commit_hash,
                    r.values.len(),
                    feature_names.len()
                )));
            }
            if r.label.is_none() {
                return Err(Error::InvalidData(format!("row {} is unlabeled", r.commit_hash)));
            }
        }
        rows.sort_by(|a, b| a.commit_hash.cmp(&b.commit_hash));
        if let Some(w) = rows.windows(2).find(|w| w[0].commit_hash == w[1].commit_hash) {
            return Err(Error::InvalidData(format!("duplicate commit hash {}", w[0].commit_hash)));
        }
        Ok(Self {
            feature_names,
            rows,
            provenance: Provenance::default(),
        })
    }

    /// Full 51-column dataset from extracted rows; unlabeled rows are skipped.
    pub fn from_extraction(rows: Vec<FeatureVector>) -> Result<Self> {
        let names = crate::features::feature_names().into_iter().map(String::from).collect();
        Self::new(names, rows.into_iter().filter(|r| r.label.is_some()).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows
            .iter()
            .map(|r| r.label.is_some_and(Label::is_defective))
            .collect()
    }

    pub fn positives(&self) -> usize {
        self.labels().iter().filter(|l| **l).count()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.into()))
    }

    /// Raw churn (LA + LD) and LT per row. Fails once values were transformed.
    pub fn efforts(&self) -> Result<Vec<Effort>> {
        if !self.provenance.flags.is_empty() {
            return Err(Error::InvalidData(format!(
                "efforts need raw values, dataset has {:?} applied",
                self.provenance.flags
            )));
        }
        let (la, ld, lt) = (self.column("LA")?, self.column("LD")?, self.column("LT")?);
        Ok(self
            .rows
            .iter()
            .map(|r| Effort {
                churn: r.values[la] + r.values[ld],
                lt: r.values[lt],
            })
            .collect())
    }

    pub fn subset(&self, ids: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: ids.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.feature_names = names.iter().map(|n| n.to_string()).collect();
        for r in &mut out.rows {
            r.values = cols.iter().map(|&c| r.values[c]).collect();
        }
        Ok(out)
    }

    pub fn select_set(&self, set: FeatureSet) -> Result<Dataset> {
        self.select(&set.names())
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(w, "{CSV_HEADER_PREFIX},{},label", self.feature_names.join(",")).map_err(io)?;
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| format_g6(*v)).collect();
            let label = u8::from(r.label.is_some_and(Label::is_defective));
            writeln!(w, "{},{},{},{label}", r.commit_hash, r.timestamp, vals.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a dataset CSV. Rows without a label are an error.
    pub fn read_csv<R: BufRead>(reader: R, origin: &Path) -> Result<Dataset> {
        let schema = |field: &str, reason: String| Error::Schema {
            path: origin.to_owned(),
            field: field.into(),
            reason,
        };
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| Error::io(origin, e))?,
            None => return Err(schema("header", "empty file".into())),
        };
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 3 || cols[0] != "commit_hash" || cols[1] != "timestamp" || cols[cols.len() - 1] != "label" {
            return Err(schema("header", format!("unexpected header `{header}`")));
        }
        let names: Vec<String> = cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        for n in &names {
            if feature_index(n).is_none() {
                return Err(Error::UnknownFeature(n.clone()));
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let lineno = i + 2;
            if fields.len() != cols.len() {
                return Err(schema(
                    "row",
                    format!("line {lineno}: {} fields, expected {}", fields.len(), cols.len()),
                ));
            }
            let timestamp = fields[1]
                .parse()
                .map_err(|_| schema("timestamp", format!("line {lineno}: `{}`", fields[1])))?;
            let values = fields[2..fields.len() - 1]
                .iter()
                .zip(&names)
                .map(|(f, n)| f.parse::<f64>().map_err(|_| schema(n, format!("line {lineno}: `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            let label = match fields[fields.len() - 1] {
                "1" => Label::DefectInducing,
                "0" => Label::Clean,
                other => return Err(schema("label", format!("line {lineno}: `{other}`"))),
            };
            rows.push(FeatureVector {
                commit_hash: fields[0].to_owned(),
                timestamp,
                values,
                label: Some(label),
            });
        }
        let mut ds = Dataset::new(names, rows)?;
        ds.provenance.source = Some(origin.to_owned());
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), path)
    }
}

/// `sign(x)·ln(1 + |x|)`, which is `ln(1 + x)` for non-negative values.
pub fn signed_log(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p() + 0.0
}

pub fn log_transform(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    for r in &mut out.rows {
        for v in &mut r.values {
            *v = signed_log(*v);
        }
    }
    out.provenance.flags.push("log".into());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleOn {
    #[default]
    Train,
    Test,
}

impl std::str::FromStr for ScaleOn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(ScaleOn::Train),
            "test" => Ok(ScaleOn::Test),
            other => Err(format!("unknown scale mode `{other}` (expected train or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub std: Vec<f64>,
}

impl ScaleParams {
    pub fn fit(ds: &Dataset) -> ScaleParams {
        let d = ds.feature_names.len();
        let n = ds.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in &ds.rows {
            for (m, v) in mean.iter_mut().zip(&r.values) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in &ds.rows {
            for ((s, v), m) in var.iter_mut().zip(&r.values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 { sd } else { 0.0 }
            })
            .collect();
        ScaleParams { mean, std }
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for r in &mut out.rows {
            for ((v, m), s) in r.values.iter_mut().zip(&self.mean).zip(&self.std) {
                *v -= m;
                if *s > 0.0 {
                    *v /= s;
                }
            }
        }
        out.provenance.flags.push("standardize".into());
        out
    }
}

/// Centers and scales both sides with statistics from one of them.
pub fn standardize(train: &Dataset, test: &Dataset, on: ScaleOn) -> Result<(Dataset, Dataset, ScaleParams)> {
    if train.is_empty() {
        return Err(Error::InvalidData("cannot standardize an empty training set".into()));
    }
    let params = match on {
        ScaleOn::Test if !test.is_empty() => ScaleParams::fit(test),
        _ => ScaleParams::fit(train),
    };
    Ok((params.apply(train), params.apply(test), params))
}

/// Randomly drops majority-class rows until both classes are equally large.
/// Returns the input unchanged, with a warning, when a class is missing.
pub fn downsample(train: &Dataset, seed: u64) -> (Dataset, Option<String>) {
    let labels = train.labels();
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        let msg = format!(
            "down-sampling skipped: {} positive and {} negative rows",
            pos.len(),
            neg.len()
        );
        log::warn!("{msg}");
        return (train.clone(), Some(msg));
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept = sample(&mut rng, majority.len(), minority.len());
    let mut ids: Vec<usize> = minority;
    ids.extend(kept.into_iter().map(|k| majority[k]));
    ids.sort_unstable();
    let mut out = train.subset(&ids);
    out.rows.sort_by(|a, b| a.commit_hash.cmp(&b.commit_hash));
    out.provenance.flags.push("downsample".into());
    (out, None)
}

/// Distinct hashes, used by tests and audits.
pub fn hashes(ds: &Dataset) -> BTreeSet<&str> {
    ds.rows.iter().map(|r| r.commit_hash.as_str()).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy(values: &[(f64, bool)]) -> Dataset {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, (v, l))| FeatureVector {
                commit_hash: format!("{i:04}"),
                timestamp: i as i64,
                values: vec![*v],
                label: Some(if *l { Label::DefectInducing } else { Label::Clean }),
            })
            .collect();
        Dataset::new(vec!["LA".into()], rows).unwrap()
    }

    #[test]
    fn log_examples() {
        assert_eq!(signed_log(0.0), 0.0);
        assert!((signed_log(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-12);
        assert!((signed_log(-5.0) + 6f64.ln()).abs() < 1e-12);
        assert!((signed_log(-5.0) + 1.7918).abs() < 1e-4);
    }

    #[test]
    fn standardize_examples() {
        let train = toy(&[(0.0, true), (2.0, false)]);
        let (t, _, p) = standardize(&train, &train, ScaleOn::Train).unwrap();
        assert_eq!(t.rows[0].values[0], -1.0);
        assert_eq!(t.rows[1].values[0], 1.0);
        assert_eq!(p.mean, vec![1.0]);

        let constant = toy(&[(3.0, true), (3.0, false), (3.0, false)]);
        let (c, _, _) = standardize(&constant, &constant, ScaleOn::Train).unwrap();
        assert!(c.rows.iter().all(|r| r.values[0] == 0.0));
    }

    #[test]
    fn scale_on_test_uses_test_statistics() {
        let train = toy(&[(0.0, true), (2.0, false)]);
        let test = toy(&[(10.0, true), (14.0, false)]);
        let (tr, te, p) = standardize(&train, &test, ScaleOn::Test).unwrap();
        assert_eq!(p.mean, vec![12.0]);
        assert_eq!(te.rows[0].values[0], -1.0);
        assert_eq!(tr.rows[0].values[0], -6.0);
    }

    #[test]
    fn downsample_examples() {
        let mut v = vec![(1.0, true); 10];
        v.extend(vec![(0.0, false); 30]);
        let ds = toy(&v);
        let (d, w) = downsample(&ds, 7);
        assert!(w.is_none());
        assert_eq!(d.positives(), 10);
        assert_eq!(d.len(), 20);
        assert_eq!(downsample(&ds, 7).0, d);

        let balanced = toy(&[(1.0, true), (0.0, false)]);
        assert_eq!(downsample(&balanced, 1).0.rows, balanced.rows);

        let single = toy(&[(1.0, true), (2.0, true)]);
        let (s, w) = downsample(&single, 1);
        assert_eq!(s, single);
        assert!(w.is_some());
    }

    #[test]
    fn csv_round_trip() {
        let ds = toy(&[(1.5, true), (-2.25, false), (1234.5, false), (0.000125, true)]);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.rows, ds.rows);
        assert_eq!(back.feature_names, ds.feature_names);
    }

    #[test]
    fn read_rejects_unlabeled_and_duplicates() {
        let unlabeled = "commit_hash,timestamp,LA,label\na,1,2,\n";
        assert!(Dataset::read_csv(unlabeled.as_bytes(), Path::new("m")).is_err());
        let dup = "commit_hash,timestamp,LA,label\na,1,2,0\na,1,2,1\n";
        assert!(Dataset::read_csv(dup.as_bytes(), Path::new("m")).is_err());
        let unknown = "commit_hash,timestamp,XYZ,label\na,1,2,0\n";
        assert!(matches!(
            Dataset::read_csv(unknown.as_bytes(), Path::new("m")),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn efforts_require_raw_values() {
        let rows = vec![FeatureVector {
            commit_hash: "a".into(),
            timestamp: 0,
            values: vec![3.0, 4.0, 10.0],
            label: Some(Label::Clean),
        }];
        let ds = Dataset::new(vec!["LA".into(), "LD".into(), "LT".into()], rows).unwrap();
        assert_eq!(ds.efforts().unwrap(), vec![Effort { churn: 7.0, lt: 10.0 }]);
        assert!(log_transform(&ds).efforts().is_err());
    }

    proptest! {
        #[test]
        fn standardized_train_has_unit_variance(xs in prop::collection::vec(-1e3f64..1e3, 2..60)) {
            let ds = toy(&xs.iter().map(|x| (*x, false)).collect::<Vec<_>>());
            let (t, _, p) = standardize(&ds, &ds, ScaleOn::Train).unwrap();
            let n = t.len() as f64;
            let mean: f64 = t.rows.iter().map(|r| r.values[0]).sum::<f64>() / n;
            let var: f64 = t.rows.iter().map(|r| (r.values[0] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            if p.std[0] > 0.0 {
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn downsample_keeps_values_and_balances(
            labels in prop::collection::vec(any::<bool>(), 1..80),
            seed in any::<u64>(),
        ) {
            let ds = toy(&labels.iter().enumerate().map(|(i, l)| (i as f64, *l)).collect::<Vec<_>>());
            let (d, w) = downsample(&ds, seed);
            let p = ds.positives();
            let n = ds.len() - p;
            if p == 0 || n == 0 {
                prop_assert!(w.is_some());
            } else {
                prop_assert_eq!(d.positives(), p.min(n));
                prop_assert_eq!(d.len(), 2 * p.min(n));
            }
            for r in &d.rows {
                let orig = ds.rows.iter().find(|o| o.commit_hash == r.commit_hash).unwrap();
                prop_assert_eq!(orig, r);
            }
        }

        #[test]
        fn csv_rewrite_is_stable(xs in prop::collection::vec(-1e9f64..1e9, 1..20)) {
            let ds = toy(&xs.iter().map(|x| (*x, true)).collect::<Vec<_>>());
            let mut a = Vec::new();
            ds.write_csv(&mut a).unwrap();
            let once = Dataset::read_csv(&a[..], Path::new("m")).unwrap();
            let mut b = Vec::new();
            once.write_csv(&mut b).unwrap();
            prop_assert_eq!(&a, &b);
            let twice = Dataset::read_csv(&b[..], Path::new("m")).unwrap();
            prop_assert_eq!(once.rows, twice.rows);
        }
    }
}
