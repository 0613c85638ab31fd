//! Run configuration: a flat key=value file plus CLI flag overrides.
//! Every emitted output carries the fully resolved config as a JSON
//! header line, so any file can be reproduced from its own header.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::DEFAULT_WINDOW;
use crate::model::{ModelParams, DEFAULT_BURN_IN};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub sigma0_sq: f64,
    pub b: f64,
    pub mu: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub window: usize,
    pub delta_ts: Vec<usize>,
    pub max_lag: usize,
    pub paths: usize,
    pub out_dir: PathBuf,
    pub data: Option<PathBuf>,
    pub date_column: String,
    pub price_column: String,
    pub date_format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma0_sq: 1e-4,
            b: 164.0,
            mu: 0.0,
            steps: 100_000,
            burn_in: DEFAULT_BURN_IN,
            seed: 1,
            window: DEFAULT_WINDOW,
            delta_ts: vec![1, 5, 42],
            max_lag: 250,
            paths: 50,
            out_dir: PathBuf::from("out"),
            data: None,
            date_column: "DATE".into(),
            price_column: String::new(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

impl RunConfig {
    /// Parse a flat `key = value` file. Unknown keys are an error so typos
    /// do not silently fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        let mut problems = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value, got '{line}'", lineno + 1));
                continue;
            };
            if let Err(e) = cfg.set(key.trim(), value.trim()) {
                problems.push(format!("line {}: {e}", lineno + 1));
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }

    /// Apply a single override; shared by the file parser and CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
        }
        match key {
            "sigma0_sq" => self.sigma0_sq = parse(key, value)?,
            "b" => self.b = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "max_lag" => self.max_lag = parse(key, value)?,
            "paths" => self.paths = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "data" => self.data = Some(PathBuf::from(value)),
            "date_column" => self.date_column = value.to_string(),
            "price_column" => self.price_column = value.to_string(),
            "date_format" => self.date_format = value.to_string(),
            "delta_ts" => {
                let mut out = Vec::new();
                for part in value.split(',') {
                    out.push(parse::<usize>(key, part.trim())?);
                }
                self.delta_ts = out;
            }
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Validate every module precondition at once; the error lists all
    /// violations, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = ModelParams::new(self.sigma0_sq, self.b, self.mu) {
            problems.push(e.to_string());
        }
        if self.steps == 0 {
            problems.push("steps must be >= 1".into());
        }
        if self.window < 2 || !self.window.is_multiple_of(2) {
            problems.push(format!("window must be even and >= 2, got {}", self.window));
        }
        if self.delta_ts.is_empty() || self.delta_ts.contains(&0) {
            problems.push("delta_ts must be a non-empty list of positive integers".into());
        }
        if self.max_lag == 0 {
            problems.push("max_lag must be >= 1".into());
        }
        if self.paths == 0 {
            problems.push("paths must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.sigma0_sq, self.b, self.mu)
    }

    pub fn csv_schema(&self) -> super::data::CsvSchema {
        super::data::CsvSchema {
            date_column: self.date_column.clone(),
            price_column: self.price_column.clone(),
            date_format: self.date_format.clone(),
        }
    }

    /// Resolved config as one JSON line for output headers.
    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Flat key=value view (round-trips through `set`).
    pub fn as_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("sigma0_sq".into(), format!("{:e}", self.sigma0_sq));
        m.insert("b".into(), self.b.to_string());
        m.insert("mu".into(), self.mu.to_string());
        m.insert("steps".into(), self.steps.to_string());
        m.insert("burn_in".into(), self.burn_in.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("window".into(), self.window.to_string());
        m.insert("max_lag".into(), self.max_lag.to_string());
        m.insert("paths".into(), self.paths.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_flat_file_with_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# model\nsigma0_sq = 5.1e-5\nb = 164\nseed = 7\ndelta_ts = 1, 5, 42").unwrap();
        let cfg = RunConfig::from_file(f.path()).unwrap();
        assert_eq!(cfg.sigma0_sq, 5.1e-5);
        assert_eq!(cfg.b, 164.0);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.delta_ts, vec![1, 5, 42]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "sigma_sq = 1").unwrap();
        assert!(RunConfig::from_file(f.path()).is_err());
    }

    #[test]
    fn validate_reports_all_violations_at_once() {
        let mut cfg = RunConfig { b: 0.5, window: 3, steps: 0, ..Default::default() };
        cfg.delta_ts.clear();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("B"), "{msg}");
        assert!(msg.contains("window"), "{msg}");
        assert!(msg.contains("steps"), "{msg}");
        assert!(msg.contains("delta_ts"), "{msg}");
    }

    #[test]
    fn header_json_is_one_line() {
        let cfg = RunConfig::default();
        let j = cfg.header_json();
        assert!(!j.contains('\n'));
        assert!(j.contains("\"seed\":1"));
    }
}
