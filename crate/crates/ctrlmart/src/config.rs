//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Keys are matched
//! with `-` and `_` treated alike, so `n-max` and `n_max` name the same
//! setting. Command-line flags take precedence over the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    source: String,
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Config {
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Config { path: source.to_string(), line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(Config { source: source.to_string(), entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Usage(format!("{}: bad value `{v}` for `{key}`: {e}", self.source))),
        }
    }

    /// Keys present in the file, normalized.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// The flag if given, else the file entry.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| Error::Usage(format!("missing required setting `--{}`", key.replace('_', "-"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg = Config::parse("run.cfg", "# sweep\nlambda = 0.25\n\nn-max=64\n").unwrap();
        assert_eq!(cfg.get::<f64>("lambda").unwrap(), Some(0.25));
        assert_eq!(cfg.get::<usize>("n_max").unwrap(), Some(64));
        assert_eq!(cfg.pick(Some(0.5), "lambda").unwrap(), Some(0.5));
        assert_eq!(cfg.pick::<f64>(None, "lambda").unwrap(), Some(0.25));
        assert!(cfg.require::<u64>(None, "seed").is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(Config::parse("c", "lambda 0.5"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(Config::parse("c", "a = 1\na = 2"), Err(Error::Config { line: 2, .. })));
        let cfg = Config::parse("c", "d = two").unwrap();
        assert!(matches!(cfg.get::<usize>("d"), Err(Error::Usage(_))));
    }
}
