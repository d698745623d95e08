use std::io::Write;

use super::{feature_names, FeatureVector};
use crate::{Error, Result};

pub const CSV_HEADER_PREFIX: &str = "commit_hash,timestamp";

/// C-style `%g` with 6 significant digits. Negative zero prints as `0`.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let digits = (5 - exp) as usize;
        trim_zeros(&format!("{x:.digits$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn header() -> String {
    let mut h = CSV_HEADER_PREFIX.to_owned();
    for n in feature_names() {
        h.push(',');
        h.push_str(n);
    }
    h.push_str(",label");
    h
}

/// Writes rows with the canonical header; labels are 0/1, empty when absent.
pub fn write_csv<W: Write>(rows: &[FeatureVector], mut w: W) -> Result<()> {
    let io = |e| Error::io("<csv output>", e);
    writeln!(w, "{}", header()).map_err(io)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        line.push_str(&row.commit_hash);
        line.push(',');
        line.push_str(&row.timestamp.to_string());
        for v in &row.values {
            line.push(',');
            line.push_str(&format_g6(*v));
        }
        line.push(',');
        if let Some(l) = row.label {
            line.push(if l.is_defective() { '1' } else { '0' });
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}
