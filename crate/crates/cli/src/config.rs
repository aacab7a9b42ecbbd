use std::path::{Path, PathBuf};

use mdl_relu::estimator::Method;
use mdl_relu::model::coded_dim;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectrum,
    CodeTable,
    Estimate,
    Redundancy,
    RiskCurve,
    GramCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::CodeTable => "code_table",
            Experiment::Estimate => "estimate",
            Experiment::Redundancy => "redundancy",
            Experiment::RiskCurve => "risk_curve",
            Experiment::GramCheck => "gram_check",
        }
    }

    /// Extension of the main artifact.
    pub fn extension(self) -> &'static str {
        match self {
            Experiment::Estimate => "json",
            _ => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    /// Analytic approximate eigenbasis, radius `√(1+ε₁)`.
    #[default]
    Approx,
    /// Leading eigenvectors of the Monte Carlo Fisher information.
    Exact,
}

fn default_d() -> usize {
    2
}
fn default_m() -> usize {
    500
}
fn default_sigma2() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    2.0
}
fn default_trials() -> usize {
    200
}
fn default_mc_samples() -> usize {
    100_000
}
fn default_renyi_samples() -> usize {
    mdl_relu::risk::DEFAULT_RENYI_SAMPLES
}
fn default_method() -> Method {
    Method::Auto
}

/// One experiment. Every field except `seed` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Sample size for `estimate`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Sample sizes for `redundancy` and `risk_curve`.
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    /// Widths swept by `gram_check`.
    #[serde(default)]
    pub m_list: Option<Vec<usize>>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "D_override", default)]
    pub d_override: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Draws for the Monte Carlo Fisher information.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// `x` draws for the Rényi evaluator.
    #[serde(default = "default_renyi_samples")]
    pub renyi_samples: usize,
    /// Rényi order; `1 − 1/α` when absent.
    #[serde(default)]
    pub lambda_order: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub basis: BasisChoice,
    /// Also write the Fisher information matrix in binary form.
    #[serde(default)]
    pub save_fim: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_N_LIST: [usize; 3] = [100, 1000, 10_000];

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        self.experiment.ok_or_else(|| CliError::Config("no experiment selected".into()))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config("a seed is required (config \"seed\" or --seed)".into()))
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(DEFAULT_N)
    }

    pub fn n_list(&self) -> Vec<usize> {
        match (&self.n_list, self.n) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => DEFAULT_N_LIST.to_vec(),
        }
    }

    pub fn m_list(&self) -> Vec<usize> {
        self.m_list.clone().unwrap_or_else(|| vec![self.m])
    }

    /// Number of coded directions.
    pub fn coded_dim(&self) -> usize {
        self.d_override.unwrap_or_else(|| coded_dim(self.d))
    }

    pub fn lambda_order(&self) -> f64 {
        self.lambda_order.unwrap_or(1.0 - 1.0 / self.alpha)
    }

    pub fn output_path(&self) -> Result<PathBuf, CliError> {
        let exp = self.experiment()?;
        Ok(self.output_path.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{}", exp.name(), exp.extension()))))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let exp = self.experiment()?;
        self.seed()?;
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 1, got {}", self.alpha));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if self.d == 0 || self.m == 0 {
            return bad("d and m must be positive".into());
        }
        if self.mc_samples == 0 || self.renyi_samples == 0 {
            return bad("mc_samples and renyi_samples must be positive".into());
        }
        if self.n == Some(0) || self.n_list.iter().flatten().any(|&n| n == 0) {
            return bad("sample sizes must be positive".into());
        }
        if self.n_list.as_ref().is_some_and(|l| l.is_empty()) || self.m_list.as_ref().is_some_and(|l| l.is_empty()) {
            return bad("n_list and m_list must not be empty".into());
        }
        if matches!(exp, Experiment::Redundancy | Experiment::RiskCurve) && self.trials < 2 {
            return bad(format!("trials must be >= 2, got {}", self.trials));
        }
        let lam = self.lambda_order();
        if !(lam > 0.0 && lam <= 1.0 - 1.0 / self.alpha + 1e-12) {
            return bad(format!("lambda_order must lie in (0, 1 - 1/alpha], got {lam}"));
        }
        let dim = self.coded_dim();
        let natural = coded_dim(self.d);
        for &m in &self.m_list() {
            if m == 0 {
                return bad("m_list entries must be positive".into());
            }
            if exp == Experiment::GramCheck && m < natural {
                return bad(format!("m = {m} is smaller than D = {natural}"));
            }
        }
        if dim == 0 || dim > self.m {
            return bad(format!("D = {dim} must lie in 1..=m (m = {})", self.m));
        }
        if self.basis == BasisChoice::Approx && dim != natural {
            return bad(format!("the approximate basis has D = {natural}; D_override = {dim} needs basis \"exact\""));
        }
        Ok(())
    }

    /// Config as echoed into every artifact.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
