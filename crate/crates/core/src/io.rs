//! Text formats: `.coeffs.json` series, disk JSON, `key=value` run
//! configurations, and CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::renorm_nd::DiskNd;
use crate::series::AnalyticUnimodal;

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffsFile {
    Bare(Vec<f64>),
    Full(AnalyticUnimodal),
}

/// Reads a series from a JSON array of coefficients, or from an object
/// `{"coeffs": [...], "halfwidth": h}`.
pub fn parse_coeffs_json(text: &str) -> Result<AnalyticUnimodal> {
    let file: CoeffsFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match file {
        CoeffsFile::Bare(c) => serde_json::from_value(serde_json::json!({ "coeffs": c }))
            .map_err(|e| Error::Parse(e.to_string())),
        CoeffsFile::Full(f) => Ok(f),
    }
}

/// Writes the coefficients as a JSON array.
pub fn coeffs_to_json(f: &AnalyticUnimodal) -> String {
    serde_json::to_string(f.coeffs()).expect("finite floats serialize")
}

pub fn parse_disk_json(text: &str) -> Result<DiskNd> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        // validation failures come back through serde as custom errors
        serde_json::error::Category::Data => Error::Parse(e.to_string()),
        _ => Error::Parse(e.to_string()),
    })
}

pub fn disk_to_json(d: &DiskNd) -> String {
    serde_json::to_string(d).expect("disk serializes")
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are `[A-Za-z0-9_-]+`, and a repeated key is an error.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key=value", lineno + 1)));
        };
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("line {}: invalid key {key:?}", lineno + 1)));
        }
        let key = key.replace('-', "_");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    Ok(out)
}

/// Writes `header` and `rows` as CSV. Fields are numbers or simple labels, so
/// no quoting is needed; `Display` for `f64` prints the shortest round-trip form.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coeffs_round_trip() {
        let f = AnalyticUnimodal::new(vec![1.0, -1.5, 0.1234567890123]);
        let g = parse_coeffs_json(&coeffs_to_json(&f)).unwrap();
        assert_eq!(f, g);
        let h = parse_coeffs_json(r#"{"coeffs": [1, -1.4], "halfwidth": 0.5}"#).unwrap();
        assert_eq!(h.halfwidth(), 0.5);
    }

    #[test]
    fn coeffs_rejects_bad_input() {
        for bad in ["", "[1, \"x\"]", r#"{"coeffs": [1], "halfwidth": -1}"#, r#"{"coeffs": [1], "halfwidth": 0}"#, "[1e999]"] {
            assert!(parse_coeffs_json(bad).is_err(), "{bad}");
        }
        let long = format!("[{}]", vec!["0"; 300].join(","));
        assert!(parse_coeffs_json(&long).is_err());
    }

    #[test]
    fn disk_round_trip() {
        let d = parse_disk_json(r#"{"center": [0.1, 0.2], "linear": [[0.5, 0.1], [0.0, 0.2]]}"#).unwrap();
        assert_eq!(parse_disk_json(&disk_to_json(&d)).unwrap(), d);
        assert!(parse_disk_json(r#"{"center": [0.1], "linear": [[0.5, 0.1]]}"#).is_err());
        assert!(parse_disk_json(r#"{"center": [0, 0], "linear": [[1, 2], [2, 4]]}"#).is_err());
    }

    #[test]
    fn config_lines() {
        let c = parse_config("# run\nnmax = 10\n\nfamily=logistic\nhenon-b = 0.3\n").unwrap();
        assert_eq!(c["nmax"], "10");
        assert_eq!(c["family"], "logistic");
        assert_eq!(c["henon_b"], "0.3");
        assert!(parse_config("nmax 10").is_err());
        assert!(parse_config("a=1\na=2").is_err());
        assert!(parse_config("bad key=1").is_err());
        assert!(parse_config("=1").is_err());
    }

    #[test]
    fn csv_has_header() {
        let s = csv(&["n", "t"], vec![vec!["0".to_string(), "3".to_string()]]);
        assert_eq!(s, "n,t\n0,3\n");
    }
}
