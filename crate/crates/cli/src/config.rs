//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`, `#` starts a comment, blank lines are ignored.
//! Channel parameters live under the `channel.` prefix. Parsing collects
//! every problem in the document rather than stopping at the first, so a
//! bad config reports all of its violations at once.

use std::fmt;
use std::path::PathBuf;

/// How the gain covariance `K` is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum GainCovSpec {
    /// `identity`
    Identity,
    /// `scaled:<c>` for `c * I`
    Scaled(f64),
    /// `file:<path>`: whitespace-separated `re im` pairs, row-major,
    /// `dim * dim` entries with `dim = nrx * ntx`.
    File(PathBuf),
}

/// Fully-validated experiment configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    // channel.*
    pub ntx: usize,
    pub nrx: usize,
    pub sigma2: f64,
    pub power: f64,
    pub alpha: f64,
    pub gain_cov: GainCovSpec,

    // shared knobs
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,

    // infodensity
    pub block_lengths: Vec<usize>,
    pub lags: Vec<usize>,

    // coding
    pub rates: Vec<f64>,
    pub coding_n: usize,
    pub gamma: Option<f64>,

    // bounds
    pub rhos: Vec<f64>,
    pub deltas: Vec<f64>,
    pub bound_ns: Vec<usize>,

    // optimize
    pub max_iters: usize,
    pub pool: usize,

    // lemmas
    pub lemma_trials: usize,
    pub geo_alphas: Vec<f64>,
    pub geo_ns: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ntx: 1,
            nrx: 1,
            sigma2: 1.0,
            power: 1.0,
            alpha: 0.0,
            gain_cov: GainCovSpec::Identity,
            seed: 1,
            trials: 2000,
            samples: 100_000,
            threads: None,
            out_dir: PathBuf::from("."),
            block_lengths: vec![64, 128, 256],
            lags: vec![1, 2, 3, 4, 5, 6],
            rates: vec![0.4, 1.6],
            coding_n: 128,
            gamma: None,
            rhos: vec![0.5, 1.0, 2.0],
            deltas: vec![0.5, 1.0],
            bound_ns: vec![1, 5, 10],
            max_iters: 500,
            pool: 4096,
            lemma_trials: 1000,
            geo_alphas: vec![0.3, 0.9],
            geo_ns: vec![10, 100],
        }
    }
}

/// One problem found while parsing or validating a config document.
#[derive(Debug, Clone)]
pub enum ConfigIssue {
    Parse { line: usize, key: String, message: String },
    Validation { key: String, message: String },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::Parse { line, key, message } => {
                write!(f, "parse error at line {line} (key `{key}`): {message}")
            }
            ConfigIssue::Validation { key, message } => {
                write!(f, "invalid `{key}`: {message}")
            }
        }
    }
}

/// All problems found in one document.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration problem(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Collector {
    issues: Vec<ConfigIssue>,
}

impl Collector {
    fn parse(&mut self, line: usize, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue::Parse {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn validation(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue::Validation {
            key: key.to_string(),
            message: message.into(),
        });
    }
}

fn parse_scalar<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
    kind: &str,
    issues: &mut Collector,
) -> Option<T> {
    match value.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            issues.parse(line, key, format!("expected {kind}, got `{value}`"));
            None
        }
    }
}

fn parse_list<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
    kind: &str,
    issues: &mut Collector,
) -> Option<Vec<T>> {
    let mut out = Vec::new();
    for piece in value.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            issues.parse(line, key, "empty element in list");
            return None;
        }
        match piece.parse::<T>() {
            Ok(v) => out.push(v),
            Err(_) => {
                issues.parse(line, key, format!("expected list of {kind}, got `{piece}`"));
                return None;
            }
        }
    }
    if out.is_empty() {
        issues.parse(line, key, "list must not be empty");
        return None;
    }
    Some(out)
}

/// Parse and validate a configuration document. On failure the error lists
/// every violation found, not just the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut issues = Collector { issues: Vec::new() };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.parse(line_no, line, "expected `key = value`");
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "channel.ntx" => {
                if let Some(v) = parse_scalar(value, line_no, key, "positive integer", &mut issues) {
                    cfg.ntx = v;
                }
            }
            "channel.nrx" => {
                if let Some(v) = parse_scalar(value, line_no, key, "positive integer", &mut issues) {
                    cfg.nrx = v;
                }
            }
            "channel.sigma2" => {
                if let Some(v) = parse_scalar(value, line_no, key, "real", &mut issues) {
                    cfg.sigma2 = v;
                }
            }
            "channel.power" => {
                if let Some(v) = parse_scalar(value, line_no, key, "real", &mut issues) {
                    cfg.power = v;
                }
            }
            "channel.alpha" => {
                if let Some(v) = parse_scalar(value, line_no, key, "real", &mut issues) {
                    cfg.alpha = v;
                }
            }
            "channel.k" => {
                if value == "identity" {
                    cfg.gain_cov = GainCovSpec::Identity;
                } else if let Some(c) = value.strip_prefix("scaled:") {
                    match c.trim().parse::<f64>() {
                        Ok(c) => cfg.gain_cov = GainCovSpec::Scaled(c),
                        Err(_) => issues.parse(line_no, key, format!("bad scale `{c}`")),
                    }
                } else if let Some(p) = value.strip_prefix("file:") {
                    cfg.gain_cov = GainCovSpec::File(PathBuf::from(p.trim()));
                } else {
                    issues.parse(
                        line_no,
                        key,
                        format!("expected identity | scaled:<c> | file:<path>, got `{value}`"),
                    );
                }
            }
            "seed" => {
                if let Some(v) = parse_scalar(value, line_no, key, "64-bit integer", &mut issues) {
                    cfg.seed = v;
                }
            }
            "trials" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.trials = v;
                }
            }
            "samples" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.samples = v;
                }
            }
            "threads" => {
                if value == "auto" {
                    cfg.threads = None;
                } else if let Some(v) = parse_scalar(value, line_no, key, "count or auto", &mut issues)
                {
                    cfg.threads = Some(v);
                }
            }
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "ns" => {
                if let Some(v) = parse_list(value, line_no, key, "counts", &mut issues) {
                    cfg.block_lengths = v;
                }
            }
            "lags" => {
                if let Some(v) = parse_list(value, line_no, key, "counts", &mut issues) {
                    cfg.lags = v;
                }
            }
            "rates" => {
                if let Some(v) = parse_list(value, line_no, key, "reals", &mut issues) {
                    cfg.rates = v;
                }
            }
            "coding_n" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.coding_n = v;
                }
            }
            "gamma" => {
                if value == "auto" {
                    cfg.gamma = None;
                } else if let Some(v) = parse_scalar(value, line_no, key, "real or auto", &mut issues)
                {
                    cfg.gamma = Some(v);
                }
            }
            "rhos" => {
                if let Some(v) = parse_list(value, line_no, key, "reals", &mut issues) {
                    cfg.rhos = v;
                }
            }
            "deltas" => {
                if let Some(v) = parse_list(value, line_no, key, "reals", &mut issues) {
                    cfg.deltas = v;
                }
            }
            "bound_ns" => {
                if let Some(v) = parse_list(value, line_no, key, "counts", &mut issues) {
                    cfg.bound_ns = v;
                }
            }
            "max_iters" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.max_iters = v;
                }
            }
            "pool" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.pool = v;
                }
            }
            "lemma_trials" => {
                if let Some(v) = parse_scalar(value, line_no, key, "count", &mut issues) {
                    cfg.lemma_trials = v;
                }
            }
            "geo_alphas" => {
                if let Some(v) = parse_list(value, line_no, key, "reals", &mut issues) {
                    cfg.geo_alphas = v;
                }
            }
            "geo_ns" => {
                if let Some(v) = parse_list(value, line_no, key, "counts", &mut issues) {
                    cfg.geo_ns = v;
                }
            }
            _ => issues.parse(line_no, key, "unknown key"),
        }
    }

    validate(&cfg, &mut issues);
    if issues.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError {
            issues: issues.issues,
        })
    }
}

fn validate(cfg: &ExperimentConfig, issues: &mut Collector) {
    if cfg.ntx == 0 {
        issues.validation("channel.ntx", "antenna count must be >= 1");
    }
    if cfg.nrx == 0 {
        issues.validation("channel.nrx", "antenna count must be >= 1");
    }
    if !(0.0..1.0).contains(&cfg.alpha) {
        issues.validation("channel.alpha", "memory factor must satisfy 0 <= alpha < 1");
    }
    if cfg.sigma2 < 0.0 || !cfg.sigma2.is_finite() {
        issues.validation("channel.sigma2", "noise variance must be finite and >= 0");
    }
    if cfg.power < 0.0 || !cfg.power.is_finite() {
        issues.validation("channel.power", "power budget must be finite and >= 0");
    }
    if let GainCovSpec::Scaled(c) = cfg.gain_cov {
        if c < 0.0 || !c.is_finite() {
            issues.validation("channel.k", "scale must be finite and >= 0");
        }
    }
    if cfg.trials == 0 {
        issues.validation("trials", "must be >= 1");
    }
    if cfg.samples == 0 {
        issues.validation("samples", "must be >= 1");
    }
    if cfg.threads == Some(0) {
        issues.validation("threads", "must be >= 1 (or auto)");
    }
    if cfg.block_lengths.contains(&0) {
        issues.validation("ns", "block lengths must be >= 1");
    }
    if cfg.coding_n == 0 {
        issues.validation("coding_n", "must be >= 1");
    }
    if cfg.rates.iter().any(|&r| r < 0.0 || !r.is_finite()) {
        issues.validation("rates", "must be finite and >= 0");
    }
    if let Some(g) = cfg.gamma {
        if g <= 0.0 || !g.is_finite() {
            issues.validation("gamma", "must be positive (or auto)");
        }
    }
    if cfg.rhos.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
        issues.validation("rhos", "must be positive");
    }
    if cfg.deltas.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        issues.validation("deltas", "must be positive");
    }
    if cfg.bound_ns.contains(&0) {
        issues.validation("bound_ns", "must be >= 1");
    }
    if cfg.max_iters == 0 {
        issues.validation("max_iters", "must be >= 1");
    }
    if cfg.pool == 0 {
        issues.validation("pool", "must be >= 1");
    }
    if cfg.lemma_trials == 0 {
        issues.validation("lemma_trials", "must be >= 1");
    }
    if cfg
        .geo_alphas
        .iter()
        .any(|&a| !(0.0 < a && a < 1.0))
    {
        issues.validation("geo_alphas", "must satisfy 0 < alpha < 1");
    }
    if cfg.geo_ns.contains(&0) {
        issues.validation("geo_ns", "must be >= 1");
    }
}
