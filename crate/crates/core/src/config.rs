//! Flat `key = value` configuration files and the run configuration they feed.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Keys are
//! case-sensitive and `-` is treated as `_`, so `theta-high` and `theta_high`
//! name the same setting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::GateParams;
use crate::recollect::RecollectParams;
use crate::retriever::PathChoice;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_kv(text: &str, source_name: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                source_name: source_name.to_string(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Config {
                source_name: source_name.to_string(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_kv(path: impl AsRef<Path>) -> Result<Vec<Entry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_kv(&text, &path.display().to_string())
}

/// Parses a single value, attaching the entry's location on failure.
pub fn parse_value<T: std::str::FromStr>(entry: &Entry, source_name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    entry.value.parse().map_err(|e: T::Err| Error::Config {
        source_name: source_name.to_string(),
        line: entry.line,
        message: format!("invalid value `{}` for `{}`: {e}", entry.value, entry.key),
    })
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(entry: &Entry, source_name: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    entry
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|e: T::Err| Error::Config {
                source_name: source_name.to_string(),
                line: entry.line,
                message: format!("invalid list item `{s}` for `{}`: {e}", entry.key),
            })
        })
        .collect()
}

/// Every tunable of a run. Unset values keep their defaults; the CLI applies
/// the config file first and flags second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    /// Defaults to `k` when unset.
    pub probe_k: Option<usize>,
    pub lambda: f64,
    pub theta_high: f64,
    pub theta_low: f64,
    pub tau: f64,
    pub beam: usize,
    pub fanout: usize,
    pub rounds: usize,
    pub alpha: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub trace: bool,
    pub recall_at: Vec<usize>,
    pub force_path: PathChoice,
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gate = GateParams::default();
        let rec = RecollectParams::default();
        Self {
            k: rec.final_k,
            probe_k: None,
            lambda: gate.lambda,
            theta_high: gate.theta_high,
            theta_low: gate.theta_low,
            tau: gate.tau,
            beam: rec.beam_b,
            fanout: rec.fanout_f,
            rounds: rec.max_rounds_r,
            alpha: rec.alpha,
            seed: rec.seed,
            threads: None,
            trace: false,
            recall_at: vec![5, 10, 50],
            force_path: PathChoice::Gated,
            corpus: None,
            queries: None,
            gold: None,
            out: None,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` entry.
    pub fn apply(&mut self, entry: &Entry, source_name: &str) -> Result<()> {
        match entry.key.as_str() {
            "k" => self.k = parse_value(entry, source_name)?,
            "probe_k" => self.probe_k = Some(parse_value(entry, source_name)?),
            "lambda" => self.lambda = parse_value(entry, source_name)?,
            "theta_high" => self.theta_high = parse_value(entry, source_name)?,
            "theta_low" => self.theta_low = parse_value(entry, source_name)?,
            "tau" => self.tau = parse_value(entry, source_name)?,
            "beam" => self.beam = parse_value(entry, source_name)?,
            "fanout" => self.fanout = parse_value(entry, source_name)?,
            "rounds" => self.rounds = parse_value(entry, source_name)?,
            "alpha" => self.alpha = parse_value(entry, source_name)?,
            "seed" => self.seed = parse_value(entry, source_name)?,
            "threads" => self.threads = Some(parse_value(entry, source_name)?),
            "trace" => self.trace = parse_value(entry, source_name)?,
            "recall_at" => self.recall_at = parse_list(entry, source_name)?,
            "force_path" => self.force_path = parse_value(entry, source_name)?,
            "corpus" => self.corpus = Some(entry.value.clone().into()),
            "queries" => self.queries = Some(entry.value.clone().into()),
            "gold" => self.gold = Some(entry.value.clone().into()),
            "out" => self.out = Some(entry.value.clone().into()),
            other => {
                return Err(Error::Config {
                    source_name: source_name.to_string(),
                    line: entry.line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let name = path.display().to_string();
        for entry in read_kv(path)? {
            self.apply(&entry, &name)?;
        }
        Ok(())
    }

    pub fn gate_params(&self) -> GateParams {
        GateParams {
            lambda: self.lambda,
            theta_high: self.theta_high,
            theta_low: self.theta_low,
            tau: self.tau,
            probe_k: self.probe_k.unwrap_or(self.k),
        }
    }

    pub fn recollect_params(&self) -> RecollectParams {
        RecollectParams {
            beam_b: self.beam,
            fanout_f: self.fanout,
            max_rounds_r: self.rounds,
            alpha: self.alpha,
            final_k: self.k,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gate_params().validate()?;
        self.recollect_params().validate()?;
        if self.recall_at.contains(&0) {
            return Err(Error::InvalidParams(
                "recall cutoffs must be positive".into(),
            ));
        }
        Ok(())
    }
}
