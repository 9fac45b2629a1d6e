//! `key = value` settings files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub type Settings = BTreeMap<String, String>;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse(text: &str, allowed: &[&str]) -> Result<Settings> {
    let mut out = Settings::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if !allowed.contains(&key.as_str()) {
            bail!("config line {}: unknown key '{key}'", n + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path, allowed: &[&str]) -> Result<Settings> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, allowed).with_context(|| format!("in {}", path.display()))
}

/// Typed lookups that name the offending key on failure.
pub trait Lookup {
    fn raw(&self, key: &str) -> Option<&str>;

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("invalid value for {key}: '{v}': {e}")))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow::anyhow!("invalid value for {key}: '{v}': {e}"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => bail!("invalid value for {key}: expected two comma-separated numbers"),
        }
    }
}

impl Lookup for Settings {
    fn raw(&self, key: &str) -> Option<&str> {
        self.get(key).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let s = parse("# header\nq_range = 0, 0.5  # trailing\n\ngrid=11\n", &["q-range", "grid"]).unwrap();
        assert_eq!(s.pair("q-range").unwrap(), Some((0.0, 0.5)));
        assert_eq!(s.parsed::<usize>("grid").unwrap(), Some(11));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let e = parse("colour = red", &["grid"]).unwrap_err();
        assert!(e.to_string().contains("colour"));
        let s = parse("grid = many", &["grid"]).unwrap();
        assert!(s.parsed::<usize>("grid").unwrap_err().to_string().contains("grid"));
        assert!(parse("grid", &["grid"]).is_err());
    }
}
