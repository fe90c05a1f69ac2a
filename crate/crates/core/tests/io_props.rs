use std::path::PathBuf;

use fct_core::io::{coeffs_to_json, disk_to_json, parse_coeffs_json, parse_config, parse_disk_json};
use fct_core::renorm_nd::DiskNd;
use fct_core::series::AnalyticUnimodal;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn corpus_seeds_parse_or_fail_cleanly() {
    for (_, bytes) in corpus("coeffs_json") {
        if let Ok(f) = parse_coeffs_json(&String::from_utf8_lossy(&bytes)) {
            assert_eq!(parse_coeffs_json(&coeffs_to_json(&f)).unwrap().coeffs(), f.coeffs());
        }
    }
    for (_, bytes) in corpus("disk_json") {
        if let Ok(d) = parse_disk_json(&String::from_utf8_lossy(&bytes)) {
            assert_eq!(parse_disk_json(&disk_to_json(&d)).unwrap(), d);
        }
    }
    for (_, bytes) in corpus("config") {
        let _ = parse_config(&String::from_utf8_lossy(&bytes));
    }
}

#[test]
fn named_seeds_behave_as_labelled() {
    let seed = |t: &str, name: &str| {
        let (_, b) = corpus(t).into_iter().find(|(p, _)| p.file_name().unwrap() == name).unwrap();
        String::from_utf8(b).unwrap()
    };
    assert!(parse_coeffs_json(&seed("coeffs_json", "initial")).is_ok());
    assert!(parse_disk_json(&seed("disk_json", "singular")).is_err());
    assert!(parse_config(&seed("config", "duplicate")).is_err());
    assert!(parse_config(&seed("config", "cascade")).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coeffs_round_trip(c in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let f = AnalyticUnimodal::new(c);
        prop_assert_eq!(parse_coeffs_json(&coeffs_to_json(&f)).unwrap(), f);
    }

    #[test]
    fn disk_round_trip(c in prop::collection::vec(-10.0f64..10.0, 3), m in prop::collection::vec(-2.0f64..2.0, 9)) {
        if let Ok(d) = DiskNd::new(DVector::from_vec(c), DMatrix::from_row_slice(3, 3, &m)) {
            prop_assert_eq!(parse_disk_json(&disk_to_json(&d)).unwrap(), d);
        }
    }

    #[test]
    fn config_round_trip(entries in prop::collection::btree_map("[a-z][a-z0-9_]{0,8}", "[A-Za-z0-9.+-]{0,12}", 0..8)) {
        let text: String = entries.iter().map(|(k, v)| format!("# note\n  {k} = {v}\n\n")).collect();
        prop_assert_eq!(parse_config(&text).unwrap(), entries);
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,64}") {
        let _ = parse_coeffs_json(&s);
        let _ = parse_disk_json(&s);
        let _ = parse_config(&s);
    }
}
