use super::anneal::{schedule_by_name, SCHEDULES};
use super::optim::{optimizer_by_name, OPTIMIZERS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: &'static str, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// Hyperparameters of one training run. Field names double as config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub anneal: String,
    pub batch_size: usize,
    pub delta: f64,
    pub epochs: usize,
    pub lambda_acyc: f64,
    pub lr_d: f64,
    pub lr_g: f64,
    pub optimizer: String,
    pub seed: u64,
    pub tau_end: f64,
    pub tau_start: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            anneal: "exponential".into(),
            batch_size: 128,
            delta: 0.5,
            epochs: 4000,
            lambda_acyc: 10.0,
            lr_d: 1e-3,
            lr_g: 5e-3,
            optimizer: "adam".into(),
            seed: 0,
            tau_end: 0.1,
            tau_start: 1.0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 11] = [
    "anneal",
    "batch_size",
    "delta",
    "epochs",
    "lambda_acyc",
    "lr_d",
    "lr_g",
    "optimizer",
    "seed",
    "tau_end",
    "tau_start",
];

fn parse_num<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key,
        value: value.to_string(),
    })
}

impl TrainConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        let mut unknown = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());
            if !cfg.set(key, value)? {
                unknown.push(key.to_string());
            }
        }
        if !unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(unknown));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from text; returns `false` for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "anneal" => self.anneal = value.to_string(),
            "batch_size" => self.batch_size = parse_num("batch_size", value)?,
            "delta" => self.delta = parse_num("delta", value)?,
            "epochs" => self.epochs = parse_num("epochs", value)?,
            "lambda_acyc" => self.lambda_acyc = parse_num("lambda_acyc", value)?,
            "lr_d" => self.lr_d = parse_num("lr_d", value)?,
            "lr_g" => self.lr_g = parse_num("lr_g", value)?,
            "optimizer" => self.optimizer = value.to_string(),
            "seed" => self.seed = parse_num("seed", value)?,
            "tau_end" => self.tau_end = parse_num("tau_end", value)?,
            "tau_start" => self.tau_start = parse_num("tau_start", value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.epochs == 0 {
            return invalid("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return invalid("batch_size must be at least 1".into());
        }
        for (name, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d), ("tau_start", self.tau_start), ("tau_end", self.tau_end)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda_acyc.is_finite() && self.lambda_acyc >= 0.0) {
            return invalid(format!("lambda_acyc must be non-negative, got {}", self.lambda_acyc));
        }
        if self.tau_end > self.tau_start {
            return invalid(format!(
                "tau_end ({}) must not exceed tau_start ({})",
                self.tau_end, self.tau_start
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if schedule_by_name(&self.anneal).is_none() {
            return invalid(format!("anneal must be one of {SCHEDULES:?}, got `{}`", self.anneal));
        }
        if optimizer_by_name(&self.optimizer, 1.0).is_none() {
            return invalid(format!("optimizer must be one of {OPTIMIZERS:?}, got `{}`", self.optimizer));
        }
        Ok(())
    }

    /// The config as parseable text, keys sorted.
    pub fn to_text(&self) -> String {
        format!(
            "anneal = {}\nbatch_size = {}\ndelta = {}\nepochs = {}\nlambda_acyc = {}\nlr_d = {}\nlr_g = {}\noptimizer = {}\nseed = {}\ntau_end = {}\ntau_start = {}\n",
            self.anneal,
            self.batch_size,
            self.delta,
            self.epochs,
            self.lambda_acyc,
            self.lr_d,
            self.lr_g,
            self.optimizer,
            self.seed,
            self.tau_end,
            self.tau_start
        )
    }
}
