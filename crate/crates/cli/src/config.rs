use overlap_core::recipes::{RecipeBConfig, TraceConfig};
use overlap_core::{Activation, GFConfig, Params, Sample};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const OUT_ENV: &str = "OVERLAP_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Minima,
    Intersect,
    PredictLimit,
    RecipeA,
    RecipeB,
    OnePoint,
    TwoPoint,
    Criterion,
    Fig1,
    Fig2,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Minima => "minima",
            Command::Intersect => "intersect",
            Command::PredictLimit => "predict-limit",
            Command::RecipeA => "recipe-a",
            Command::RecipeB => "recipe-b",
            Command::OnePoint => "one-point",
            Command::TwoPoint => "two-point",
            Command::Criterion => "criterion",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(String),
    #[error("missing field `{0}` for this command")]
    Missing(&'static str),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub activation: Activation,
    pub theta0: Option<Params>,
    pub samples: Vec<Sample>,
    /// Inputs for `one-point`.
    pub xs: Vec<f64>,
    /// Target for `recipe-a`.
    pub target: Option<Params>,
    pub w_range: Option<(f64, f64)>,
    pub grid: usize,
    pub tol: f64,
    pub sep_min: f64,
    /// Expansion point and sample input for `criterion`.
    pub w: f64,
    pub x0: f64,
    /// Number of `recipe-b` steps.
    pub steps: usize,
    pub seed: u64,
    /// Random instances per `suite` experiment.
    pub count: usize,
    pub out_dir: Option<PathBuf>,
    pub gf: GFConfig,
    pub recipe_b: RecipeBConfig,
    pub trace: TraceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            activation: Activation::Sigmoid,
            theta0: None,
            samples: Vec::new(),
            xs: Vec::new(),
            target: None,
            w_range: None,
            grid: 1001,
            tol: 1e-6,
            sep_min: 1e-2,
            w: 1.0,
            x0: 1.0,
            steps: 3,
            seed: 0,
            count: 20,
            out_dir: None,
            gf: GFConfig::default(),
            recipe_b: RecipeBConfig::default(),
            trace: TraceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn theta0(&self) -> Result<&Params, ConfigError> {
        self.theta0.as_ref().ok_or(ConfigError::Missing("theta0"))
    }

    pub fn samples(&self, n: usize) -> Result<&[Sample], ConfigError> {
        if self.samples.len() < n {
            return Err(ConfigError::Missing("samples"));
        }
        Ok(&self.samples[..n])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid < 2 {
            return Err(ConfigError::Invalid("grid needs at least 2 points".into()));
        }
        if !(self.tol > 0.0) || !(self.sep_min >= 0.0) {
            return Err(ConfigError::Invalid("tol must be positive and sep_min non-negative".into()));
        }
        if let Some((lo, hi)) = self.w_range {
            if !(lo < hi) {
                return Err(ConfigError::Invalid(format!("w_range ({lo}, {hi}) is empty")));
            }
        }
        Ok(())
    }
}

/// Output directory precedence: explicit flag, then `OVERLAP_LAB_OUT`, then
/// the config file, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, config: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Parses `exp`, `sigmoid`, `softplus`, `gaussian` or `power` (with `q`).
pub fn parse_activation(name: &str, q: Option<f64>) -> Result<Activation, ConfigError> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "exp" => Activation::Exp,
        "sigmoid" => Activation::Sigmoid,
        "softplus" => Activation::Softplus,
        "gaussian" => Activation::Gaussian,
        "power" => Activation::Power { q: q.ok_or(ConfigError::Missing("q"))? },
        other => return Err(ConfigError::Invalid(format!("unknown activation `{other}`"))),
    })
}
