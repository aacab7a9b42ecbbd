//! Generalization risk, empirical redundancy, and the closed-form bounds.
//!
//! Risk is the conditional Rényi divergence between the true model and the
//! fitted one,
//! `d_λ(p*, p̈) = −1/(1−λ)·log E_x ∫ p*(y|x)^λ p̈(y|x)^{1−λ} dy`.
//! For two Gaussians with common variance `σ²` and means differing by `δ`
//! the inner integral is `exp(−λ(1−λ)δ²/(2σ²))`, so only the outer
//! expectation over `x` needs Monte Carlo.

use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{mdl_estimate, reduce, Method};
use crate::linalg::{pairwise_sum, MeanSe};
use crate::model::{generate_dataset, neg_log_likelihood, NetworkModel, TrueParam};
use crate::rng::{seeded, substream};
use crate::spectral::FimMatrix;
use crate::twostage::CodedBasis;

/// Default number of `x` draws for the Rényi evaluator.
pub const DEFAULT_RENYI_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiConfig {
    pub lambda_order: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl RenyiConfig {
    pub fn new(lambda_order: f64, mc_samples: usize, seed: u64) -> Result<Self> {
        let cfg = RenyiConfig { lambda_order, mc_samples, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Order `λ = 1 − 1/α`, the largest one the risk bound covers.
    pub fn for_alpha(alpha: f64, mc_samples: usize, seed: u64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::invalid(format!("alpha must be > 1, got {alpha}")));
        }
        Self::new(1.0 - 1.0 / alpha, mc_samples, seed)
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.lambda_order)?;
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        Ok(())
    }
}

fn check_order(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("Renyi order must lie in (0, 1), got {lambda}")))
    }
}

/// `∫ N(y; μ, σ²)^λ N(y; μ+δ, σ²)^{1−λ} dy`.
pub fn gaussian_renyi_integrand(delta: f64, lambda: f64, sigma2: f64) -> f64 {
    (-lambda * (1.0 - lambda) * delta * delta / (2.0 * sigma2)).exp()
}

/// Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiEstimate {
    pub value: f64,
    pub se: f64,
}

/// Fixed `x` draws shared by every divergence evaluation.
///
/// Holds the `S × m` feature matrix, so memory is `8·S·m` bytes.
#[derive(Debug, Clone)]
pub struct RenyiEvaluator {
    features: Array2<f64>,
    sigma2: f64,
}

impl RenyiEvaluator {
    pub fn new(model: &NetworkModel, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        let mut rng = seeded(seed);
        let inputs = Array2::from_shape_simple_fn((samples, model.d()), || StandardNormal.sample(&mut rng));
        Ok(RenyiEvaluator { features: model.features(inputs.view())?, sigma2: model.sigma2() })
    }

    /// Evaluator over given feature rows, for synthetic checks.
    pub fn from_features(features: Array2<f64>, sigma2: f64) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::invalid("need at least one feature row"));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(RenyiEvaluator { features, sigma2 })
    }

    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    fn deltas(&self, v1: ArrayView1<'_, f64>, v2: ArrayView1<'_, f64>) -> Result<Option<Array1<f64>>> {
        let m = self.features.ncols();
        if v1.len() != m || v2.len() != m {
            return Err(Error::shape(format!(
                "parameters have lengths {} and {}, features have {m} columns",
                v1.len(),
                v2.len()
            )));
        }
        if v1.iter().chain(v2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        let w = &v2 - &v1;
        if w.iter().all(|&x| x == 0.0) {
            return Ok(None);
        }
        Ok(Some(self.features.dot(&w)))
    }

    /// `d_λ(p_{v1}, p_{v2})` over the stored draws.
    pub fn divergence(&self, v1: ArrayView1<'_, f64>, v2: ArrayView1<'_, f64>, lambda: f64) -> Result<RenyiEstimate> {
        check_order(lambda)?;
        let Some(delta) = self.deltas(v1, v2)? else {
            return Ok(RenyiEstimate { value: 0.0, se: 0.0 });
        };
        Ok(self.estimate_from(&delta, lambda))
    }

    /// The divergence at several orders on the same draws.
    pub fn divergence_orders(
        &self,
        v1: ArrayView1<'_, f64>,
        v2: ArrayView1<'_, f64>,
        lambdas: &[f64],
    ) -> Result<Vec<RenyiEstimate>> {
        for &l in lambdas {
            check_order(l)?;
        }
        let delta = self.deltas(v1, v2)?;
        Ok(lambdas
            .iter()
            .map(|&l| match &delta {
                None => RenyiEstimate { value: 0.0, se: 0.0 },
                Some(d) => self.estimate_from(d, l),
            })
            .collect())
    }

    fn estimate_from(&self, delta: &Array1<f64>, lambda: f64) -> RenyiEstimate {
        let k = lambda * (1.0 - lambda) / (2.0 * self.sigma2);
        let logs: Vec<f64> = delta.iter().map(|d| -k * d * d).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = logs.iter().map(|a| (a - top).exp()).collect();
        let stats = MeanSe::from_samples(&shifted);
        let value = -(top + stats.mean.ln()) / (1.0 - lambda);
        let se = if stats.count < 2 { 0.0 } else { stats.se / stats.mean / (1.0 - lambda) };
        RenyiEstimate { value, se }
    }
}

/// One-shot `d_λ(p_{v1}, p_{v2})` with fresh draws from `cfg.seed`.
pub fn renyi_conditional(
    v1: ArrayView1<'_, f64>,
    v2: ArrayView1<'_, f64>,
    model: &NetworkModel,
    cfg: &RenyiConfig,
) -> Result<f64> {
    cfg.validate()?;
    let eval = RenyiEvaluator::new(model, cfg.mc_samples, cfg.seed)?;
    Ok(eval.divergence(v1, v2, cfg.lambda_order)?.value)
}

/// `(v1−v2) J (v1−v2)ᵀ / (2σ²)`.
pub fn kl_conditional(v1: ArrayView1<'_, f64>, v2: ArrayView1<'_, f64>, fim: &FimMatrix, sigma2: f64) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::shape(format!("parameters have lengths {} and {}", v1.len(), v2.len())));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let w = &v1 - &v2;
    Ok((fim.quadratic_form(w.view())? / (2.0 * sigma2)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundScale {
    /// Total redundancy of `n` samples.
    Theorem2,
    /// Per-sample risk, linear code on exact eigendirections.
    Corollary1,
    /// Per-sample risk, code on the approximate basis.
    Theorem3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub scale: BoundScale,
    pub term_log: f64,
    pub term_c: f64,
    pub term_dim: f64,
    pub term_tail: f64,
    /// `term_log + term_c + term_dim + term_tail`.
    pub total: f64,
    /// `β_D` (or `β`) after clipping at 0.
    pub beta: f64,
    /// `β` came out negative and was clipped.
    pub beta_clipped: bool,
    pub eps1: f64,
    pub trace: f64,
    pub dim: usize,
}

impl BoundBreakdown {
    fn assemble(
        scale: BoundScale,
        [term_log, term_c, term_dim, term_tail]: [f64; 4],
        beta: (f64, bool),
        eps1: f64,
        trace: f64,
        dim: usize,
    ) -> Result<Self> {
        let total = term_log + term_c + term_dim + term_tail;
        if !total.is_finite() {
            return Err(Error::Degenerate(format!("bound is not finite ({total})")));
        }
        Ok(BoundBreakdown {
            scale,
            term_log,
            term_c,
            term_dim,
            term_tail,
            total,
            beta: beta.0,
            beta_clipped: beta.1,
            eps1,
            trace,
            dim,
        })
    }
}

fn check_bound_inputs(lambdas: &[f64], trace: f64, alpha: f64, sigma2: f64, n: usize) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::invalid("need at least one coded direction"));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!("eigenvalues must be positive, got {l}")));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be > 1, got {alpha}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(Error::invalid(format!("trace must be positive, got {trace}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    Ok(())
}

/// `Σᵢ (log cᵢ + 1/(cᵢ√n))` with `cᵢ = √(scale·λᵢ/(ασ²))`.
fn c_sum(lambdas: &[f64], scale: f64, alpha: f64, sigma2: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let terms: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let c = (scale * l / (alpha * sigma2)).sqrt();
            c.ln() + 1.0 / (c * sqrt_n)
        })
        .collect();
    pairwise_sum(&terms)
}

fn clipped_beta(lambdas: &[f64], trace: f64) -> (f64, bool) {
    let beta = 1.0 - pairwise_sum(lambdas) / trace;
    if beta < 0.0 {
        (0.0, true)
    } else {
        (beta, false)
    }
}

/// `β_D` from the leading `D` eigenvalues; exactly 0 when `D = m`.
fn beta_d(lambdas: &[f64], trace: f64, m: usize) -> Result<(f64, bool)> {
    if lambdas.len() > m {
        return Err(Error::invalid(format!("D = {} exceeds m = {m}", lambdas.len())));
    }
    if lambdas.len() == m {
        return Ok((0.0, false));
    }
    Ok(clipped_beta(lambdas, trace))
}

/// Redundancy bound for the code on the leading `D` eigendirections of
/// `J`: `αD·log n/2 + αΣ(log cᵢ + 1/(cᵢ√n)) + αD/2 + 2nβ_D·tr(J)/σ²`.
pub fn thm2_rhs(lambdas: &[f64], trace: f64, m: usize, alpha: f64, sigma2: f64, n: usize) -> Result<BoundBreakdown> {
    check_bound_inputs(lambdas, trace, alpha, sigma2, n)?;
    let beta = beta_d(lambdas, trace, m)?;
    let (dd, nf) = (lambdas.len() as f64, n as f64);
    let terms = [
        alpha * dd * nf.ln() / 2.0,
        alpha * c_sum(lambdas, 1.0, alpha, sigma2, n),
        alpha * dd / 2.0,
        2.0 * nf * beta.0 * trace / sigma2,
    ];
    BoundBreakdown::assemble(BoundScale::Theorem2, terms, beta, 0.0, trace, lambdas.len())
}

/// Risk bound of the same code: [`thm2_rhs`] with every term divided by `n`.
pub fn cor1_rhs(lambdas: &[f64], trace: f64, m: usize, alpha: f64, sigma2: f64, n: usize) -> Result<BoundBreakdown> {
    let t = thm2_rhs(lambdas, trace, m, alpha, sigma2, n)?;
    let nf = n as f64;
    let terms = [t.term_log / nf, t.term_c / nf, t.term_dim / nf, 2.0 * t.beta * trace / sigma2];
    BoundBreakdown::assemble(BoundScale::Corollary1, terms, (t.beta, t.beta_clipped), 0.0, trace, t.dim)
}

/// Risk bound for the code on the approximate basis:
/// `D·log n/(2n) + (α/n)Σ(log cᵢ + 1/(cᵢ√n)) + Dα/(2n) + 2(1+ε₁)(β+ε₁)·tr(J)/σ²`
/// with `cᵢ = √((1+ε₁)λᵢ/(ασ²))` and `β = 1 − Σλᵢ/tr(J)` clipped at 0.
///
/// `β` may legitimately be negative since the `λᵢ` weight non-unit rows;
/// what cannot be negative is `β + ε₁`, which bounds the trace of the
/// residual in dual coordinates. Inputs with `Σλᵢ > (1+ε₁)·tr(J)` are
/// rejected.
pub fn thm3_rhs(lambdas: &[f64], trace: f64, alpha: f64, sigma2: f64, n: usize, eps1: f64) -> Result<BoundBreakdown> {
    check_bound_inputs(lambdas, trace, alpha, sigma2, n)?;
    if !(eps1 >= 0.0 && eps1.is_finite()) {
        return Err(Error::invalid(format!("eps1 must be >= 0, got {eps1}")));
    }
    let total_lambda = pairwise_sum(lambdas);
    if total_lambda > (1.0 + eps1) * trace * (1.0 + 1e-6) {
        return Err(Error::Inconsistent(format!(
            "sum of eigenvalues {total_lambda} exceeds (1 + eps1)·trace = {}",
            (1.0 + eps1) * trace
        )));
    }
    let beta = clipped_beta(lambdas, trace);
    let (dd, nf) = (lambdas.len() as f64, n as f64);
    let terms = [
        dd * nf.ln() / (2.0 * nf),
        alpha / nf * c_sum(lambdas, 1.0 + eps1, alpha, sigma2, n),
        dd * alpha / (2.0 * nf),
        2.0 * (1.0 + eps1) * (beta.0 + eps1) * trace / sigma2,
    ];
    BoundBreakdown::assemble(BoundScale::Theorem3, terms, beta, eps1, trace, lambdas.len())
}

/// Everything one trial needs besides its seed.
#[derive(Debug, Clone, Copy)]
pub struct TrialSetup<'a> {
    pub model: &'a NetworkModel,
    pub vstar: &'a TrueParam,
    pub basis: &'a CodedBasis,
    pub alpha: f64,
    pub n: usize,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `log p*(yⁿ|xⁿ) − log p_v̈(yⁿ|xⁿ) + α·L(v̈)`.
    pub redundancy: f64,
    /// `d_λ(p*, p̈)` when a Rényi evaluator was supplied.
    pub risk: Option<f64>,
    /// `‖v̈ − v*‖`.
    pub error_norm: f64,
    pub clamped: bool,
}

/// Runs `trials` independent fits. Trial `t` draws its data from
/// `substream(seed, t)`, so results do not depend on the thread count.
pub fn run_trials(
    setup: &TrialSetup<'_>,
    trials: usize,
    seed: u64,
    renyi: Option<(&RenyiEvaluator, f64)>,
) -> Result<Vec<TrialOutcome>> {
    let TrialSetup { model, vstar, basis, alpha, n, method } = *setup;
    if basis.m() != model.m() || vstar.view().len() != model.m() {
        return Err(Error::shape(format!(
            "basis rows have length {}, parameter {}, model m = {}",
            basis.m(),
            vstar.view().len(),
            model.m()
        )));
    }
    if let Some((_, l)) = renyi {
        check_order(l)?;
        if l > 1.0 - 1.0 / alpha + 1e-12 {
            return Err(Error::invalid(format!("Renyi order {l} exceeds 1 - 1/alpha = {}", 1.0 - 1.0 / alpha)));
        }
    }
    let sigma2 = model.sigma2();
    let spec = basis.code(alpha, sigma2, n)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t);
            let data = generate_dataset(model, vstar, n, &mut rng)?;
            let problem = reduce(&data, basis.rows.view(), sigma2)?;
            let est = mdl_estimate(&problem, &spec, alpha, method)?;
            let nll_star = neg_log_likelihood(vstar.view(), &data, sigma2)?;
            let risk = match renyi {
                Some((eval, l)) => Some(eval.divergence(vstar.view(), est.v_ddot.view(), l)?.value),
                None => None,
            };
            let diff = &est.v_ddot - &vstar.view();
            Ok(TrialOutcome {
                redundancy: est.neg_log_lik - nll_star + alpha * est.code_length_nats,
                risk,
                error_norm: diff.dot(&diff).sqrt(),
                clamped: est.clamped,
            })
        })
        .collect()
}

/// Mean and standard error of the redundancy over `trials` datasets.
pub fn empirical_redundancy(setup: &TrialSetup<'_>, trials: usize, seed: u64) -> Result<MeanSe> {
    check_trials(trials)?;
    let out = run_trials(setup, trials, seed, None)?;
    Ok(MeanSe::from_samples(&out.iter().map(|o| o.redundancy).collect::<Vec<_>>()))
}

/// Risk and redundancy measured on the same fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedEstimate {
    pub risk: MeanSe,
    pub redundancy: MeanSe,
    pub n: usize,
}

impl PairedEstimate {
    /// `risk ≤ redundancy/n` up to `k` combined standard errors.
    pub fn risk_within_redundancy(&self, k: f64) -> bool {
        let nf = self.n as f64;
        let se = (self.risk.se.powi(2) + (self.redundancy.se / nf).powi(2)).sqrt();
        self.risk.mean <= self.redundancy.mean / nf + k * se
    }
}

/// Mean Rényi risk over `trials` fits, with the paired redundancy.
///
/// `cfg.seed` fixes the `x` draws of the evaluator; `seed` the datasets.
pub fn empirical_risk(setup: &TrialSetup<'_>, cfg: &RenyiConfig, trials: usize, seed: u64) -> Result<PairedEstimate> {
    check_trials(trials)?;
    cfg.validate()?;
    let eval = RenyiEvaluator::new(setup.model, cfg.mc_samples, cfg.seed)?;
    paired_with(setup, &eval, cfg.lambda_order, trials, seed)
}

/// As [`empirical_risk`] with a prepared evaluator.
pub fn paired_with(
    setup: &TrialSetup<'_>,
    eval: &RenyiEvaluator,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> Result<PairedEstimate> {
    check_trials(trials)?;
    let out = run_trials(setup, trials, seed, Some((eval, lambda)))?;
    let risks: Vec<f64> = out.iter().map(|o| o.risk.unwrap_or(f64::NAN)).collect();
    let reds: Vec<f64> = out.iter().map(|o| o.redundancy).collect();
    Ok(PairedEstimate { risk: MeanSe::from_samples(&risks), redundancy: MeanSe::from_samples(&reds), n: setup.n })
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::invalid(format!("need at least 2 trials, got {trials}")));
    }
    Ok(())
}

/// Monte Carlo `E[log p_{v*}(yⁿ|xⁿ)/p_v(yⁿ|xⁿ)]` for a fixed `v` over data
/// drawn from `v*`.
pub fn expected_log_ratio(
    model: &NetworkModel,
    vstar: &TrueParam,
    v: ArrayView1<'_, f64>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MeanSe> {
    check_trials(trials)?;
    if v.len() != model.m() {
        return Err(Error::shape(format!("parameter has length {}, model m = {}", v.len(), model.m())));
    }
    let sigma2 = model.sigma2();
    let ratios = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let data = generate_dataset(model, vstar, n, &mut substream(seed, t))?;
            Ok(neg_log_likelihood(v, &data, sigma2)? - neg_log_likelihood(vstar.view(), &data, sigma2)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeanSe::from_samples(&ratios))
}

/// One row of a risk curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: usize,
    pub alpha: f64,
    pub lambda_order: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub trials: usize,
    pub risk_mean: f64,
    pub risk_se: f64,
    pub redundancy_mean: f64,
    pub redundancy_se: f64,
    pub bound_cor1: f64,
    pub bound_thm3: f64,
    pub term_log: f64,
    pub term_c: f64,
    pub term_dim: f64,
    pub term_tail: f64,
    pub eps1: f64,
    pub beta: f64,
    pub trace: f64,
}

impl RiskRow {
    /// Term columns, `eps1` and `beta` come from `primary`, the bound that
    /// matches the coded basis.
    pub fn new(
        alpha: f64,
        lambda_order: f64,
        paired: &PairedEstimate,
        cor1: &BoundBreakdown,
        thm3: &BoundBreakdown,
        primary: &BoundBreakdown,
    ) -> Self {
        RiskRow {
            n: paired.n,
            alpha,
            lambda_order,
            dim: primary.dim,
            trials: paired.risk.count,
            risk_mean: paired.risk.mean,
            risk_se: paired.risk.se,
            redundancy_mean: paired.redundancy.mean,
            redundancy_se: paired.redundancy.se,
            bound_cor1: cor1.total,
            bound_thm3: thm3.total,
            term_log: primary.term_log,
            term_c: primary.term_c,
            term_dim: primary.term_dim,
            term_tail: primary.term_tail,
            eps1: primary.eps1,
            beta: primary.beta,
            trace: primary.trace,
        }
    }
}

/// Writes rows as CSV with a header line.
pub fn write_risk_csv<W: std::io::Write>(out: W, rows: &[RiskRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
