//! Flat `key = value` parameter files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    = blank | comment | entry
//! comment = ws* "#" any*
//! entry   = ws* key ws* "=" ws* value ws* ( "#" any* )?
//! key     = [A-Za-z0-9_-]+          ("-" and "_" are interchangeable)
//! value   = any non-empty text without "#"
//! ```
//!
//! Keys are case-insensitive. A repeated key is an error.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Every key accepted in a config file (normalized spelling).
pub const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "scheme",
    "modulation",
    "n_photons",
    "na",
    "eta1",
    "eta2",
    "eta_tap",
    "block",
    "neps",
    "s",
    "r",
    "alpha",
    "eta",
    "sweep",
    "from",
    "to",
    "steps",
    "runs",
    "calibration_runs",
    "horizon",
    "n_c",
    "gamma",
    "threshold",
    "target",
    "h_min",
    "h_max",
    "points",
    "run_length",
    "seed",
    "out",
    "workers",
    "paper_scale",
];

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// String-valued parameters merged from a config file and command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Params::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Usage(format!("config line {lineno}: expected `key = value`")));
            };
            let key = normalize_key(k);
            let value = v.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Usage(format!("config line {lineno}: invalid key `{}`", k.trim())));
            }
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Usage(format!("config line {lineno}: unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::Usage(format!("config line {lineno}: empty value for `{key}`")));
            }
            if p.map.insert(key.clone(), value.to_owned()).is_some() {
                return Err(Error::Usage(format!("config line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Params::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    /// Overrides (or adds) one value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(normalize_key(key), value.to_string());
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(&normalize_key(key))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("cannot parse `{v}` for `{}`", normalize_key(key)))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key).map(str::to_ascii_lowercase).as_deref() {
            None => Ok(false),
            Some("1" | "true" | "yes" | "on") => Ok(true),
            Some("0" | "false" | "no" | "off") => Ok(false),
            Some(v) => Err(Error::Usage(format!("`{}` expects a boolean, got `{v}`", normalize_key(key)))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let p = Params::parse("# header\n\n  seed = 42  # trailing\nn-photons=100\nETA1 = 0.9\n").unwrap();
        assert_eq!(p.get::<u64>("seed").unwrap(), Some(42));
        assert_eq!(p.get::<f64>("n_photons").unwrap(), Some(100.0));
        assert_eq!(p.get::<f64>("eta1").unwrap(), Some(0.9));
        assert_eq!(p.get::<f64>("eta2").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(Params::parse("seed 4"), Err(Error::Usage(_))));
        assert!(matches!(Params::parse("bogus = 1"), Err(Error::Usage(_))));
        assert!(matches!(Params::parse("seed ="), Err(Error::Usage(_))));
        assert!(matches!(Params::parse("seed = 1\nseed = 2"), Err(Error::Usage(_))));
        assert!(matches!(Params::parse("se ed = 1"), Err(Error::Usage(_))));
    }

    #[test]
    fn typed_errors() {
        let p = Params::parse("runs = many\npaper_scale = maybe").unwrap();
        assert!(matches!(p.get::<usize>("runs"), Err(Error::Usage(_))));
        assert!(p.flag("paper-scale").is_err());
    }

    #[test]
    fn overrides() {
        let mut p = Params::parse("seed = 1").unwrap();
        p.set("seed", 9);
        p.set_opt::<u64>("runs", None);
        assert_eq!(p.get_or("seed", 0u64).unwrap(), 9);
        assert!(!p.contains("runs"));
    }
}
