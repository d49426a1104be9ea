//! Flat `key = value` configuration.
//!
//! Lines are `key = value`; `#` starts a comment; a `[section]` line
//! prefixes the keys that follow with `section.`. Keys may repeat neither
//! directly nor through sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cache::sha256_hex;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
    source: String,
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = {value:?}: expected {what}"))
}

/// Integers written plainly, with `_` separators, or as `a^b` / `aeb`.
pub fn parse_u64(text: &str) -> Option<u64> {
    let t = text.trim().replace('_', "");
    if let Some((base, exp)) = t.split_once('^') {
        let base: u64 = base.trim().parse().ok()?;
        let exp: u32 = exp.trim().parse().ok()?;
        return base.checked_pow(exp);
    }
    if let Some((mant, exp)) = t.split_once(['e', 'E']) {
        let mant: u64 = mant.trim().parse().ok()?;
        let exp: u32 = exp.trim().parse().ok()?;
        return 10u64.checked_pow(exp)?.checked_mul(mant);
    }
    t.parse().ok()
}

fn parse_i64(text: &str) -> Option<i64> {
    let t = text.trim();
    match t.strip_prefix('-') {
        Some(rest) => parse_u64(rest).and_then(|v| i64::try_from(v).ok()).map(|v| -v),
        None => parse_u64(t).and_then(|v| i64::try_from(v).ok()),
    }
}

/// Reals as decimals or `p/q`.
pub fn parse_f64(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        return (q != 0.0).then_some(p / q);
    }
    t.parse().ok().filter(|x: &f64| x.is_finite())
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", no + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", no + 1)));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {full}", no + 1)));
            }
        }
        Ok(Self {
            entries,
            source: text.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Digest of the configuration text as written.
    pub fn sha256(&self) -> String {
        sha256_hex(self.source.as_bytes())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing key {key}")))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_u64(v).ok_or_else(|| bad(key, v, "a nonnegative integer")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(v).ok_or_else(|| bad(key, v, "a real number")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(bad(key, v, "true or false")),
        }
    }

    pub fn list_or(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.get(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    pub fn u64_list_or(&self, key: &str, default: &[u64]) -> CliResult<Vec<u64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let out = v
                    .split(',')
                    .map(|s| parse_u64(s).ok_or_else(|| bad(key, v, "a list of integers")))
                    .collect::<CliResult<Vec<_>>>()?;
                if out.is_empty() {
                    return Err(bad(key, v, "a nonempty list"));
                }
                Ok(out)
            }
        }
    }

    pub fn i64_list_or(&self, key: &str, default: &[i64]) -> CliResult<Vec<i64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| parse_i64(s).ok_or_else(|| bad(key, v, "a list of integers")))
                .collect(),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| parse_f64(s).ok_or_else(|| bad(key, v, "a list of reals")))
                .collect(),
        }
    }

    /// Entries under `prefix.`, with the prefix removed.
    pub fn section(&self, prefix: &str) -> Vec<(&str, &str)> {
        let p = format!("{prefix}.");
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&p).map(|rest| (rest, v.as_str())))
            .collect()
    }

    /// Rejects keys outside `allowed`; an entry ending in `.*` admits a
    /// whole prefix.
    pub fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        for key in self.entries.keys() {
            let ok = allowed.iter().any(|a| match a.strip_suffix('*') {
                Some(prefix) => key.starts_with(prefix),
                None => key == a,
            });
            if !ok {
                return Err(CliError::Config(format!("unknown key {key}")));
            }
        }
        Ok(())
    }
}

/// Keys common to every experiment.
pub const COMMON_KEYS: &[&str] = &["experiment", "output", "workers", "seed"];

/// Experiment name, output directory, worker count and seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub experiment: String,
    pub output: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

impl RunSettings {
    pub fn from_config(config: &Config) -> CliResult<Self> {
        let experiment = config.require("experiment")?.to_string();
        let output = PathBuf::from(
            config
                .get("output")
                .map(str::to_string)
                .unwrap_or_else(|| format!("results/{experiment}")),
        );
        let workers = config.u64_or("workers", 1)? as usize;
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(Self {
            experiment,
            output,
            workers,
            seed: config.u64_or("seed", 0)?,
        })
    }
}
