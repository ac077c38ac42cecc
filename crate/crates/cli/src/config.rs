//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Resolved settings for one command. Keys outside the command's schema are
/// rejected on load.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn parse_line(line: &str) -> Result<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key = value, got '{line}'"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        bail!("empty key in '{line}'");
    }
    Ok(Some((k.to_string(), v.to_string())))
}

impl Settings {
    /// Builds settings from an optional file and `key=value` overrides,
    /// checking every key against `allowed`.
    pub fn load(file: Option<&Path>, overrides: &[String], allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                if let Some((k, v)) =
                    parse_line(line).with_context(|| format!("{}:{}", path.display(), i + 1))?
                {
                    values.insert(k, v);
                }
            }
        }
        for o in overrides {
            let (k, v) = parse_line(o)?.ok_or_else(|| anyhow!("empty override"))?;
            values.insert(k, v);
        }
        if let Some(bad) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            bail!(
                "unknown config key '{bad}' (allowed: {})",
                allowed.join(", ")
            );
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key '{key}' = '{v}': {e}"))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.values.get(key).map(String::as_str).unwrap_or(default)
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_comments_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# grid point\nchains = 4\ntau0 = 50 # calibrated\n\n",
        )
        .unwrap();
        let s = Settings::load(Some(&path), &["chains=2".into()], &["chains", "tau0"]).unwrap();
        assert_eq!(s.get::<usize>("chains").unwrap(), Some(2));
        assert_eq!(s.get::<f64>("tau0").unwrap(), Some(50.0));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_errors() {
        assert!(Settings::load(None, &["chain=2".into()], &["chains"]).is_err());
        assert!(Settings::load(None, &["chains".into()], &["chains"]).is_err());
        let s = Settings::load(None, &["chains=two".into()], &["chains"]).unwrap();
        assert!(s.get::<usize>("chains").is_err());
    }
}
