//! Flag/config-file merging. A flag always wins over the `--config` file,
//! which wins over the built-in default.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::Failure;

pub struct Settings {
    file: BTreeMap<String, String>,
}

pub const GLOBAL_KEYS: [&str; 3] = ["out", "jobs", "timestamp"];

impl Settings {
    pub fn from_file(text: Option<&str>) -> Result<Self, Failure> {
        let file = match text {
            Some(t) => fct_core::io::parse_config(t).map_err(|e| Failure::Usage(e.to_string()))?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    /// Rejects config keys that neither the subcommand nor the global options know.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), Failure> {
        match self.file.keys().find(|k| !known.contains(&k.as_str()) && !GLOBAL_KEYS.contains(&k.as_str())) {
            Some(k) => Err(Failure::Usage(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn value<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config key {key:?}: cannot parse {v:?}"))),
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Failure> {
        Ok(self.value(flag, key)?.unwrap_or(default))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool, Failure> {
        if flag {
            return Ok(true);
        }
        self.get(None, key, false)
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

pub fn in_range<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: T) -> Result<T, Failure> {
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--{name} must lie in [{lo}, {hi}], got {v}")))
    }
}
