use std::path::{Path, PathBuf};

use mdl_relu::estimator::{mdl_estimate, reduce};
use mdl_relu::linalg::row_norms;
use mdl_relu::model::{generate_dataset, sample_true_param, NetworkModel};
use mdl_relu::risk::{
    cor1_rhs, empirical_redundancy, paired_with, thm2_rhs, thm3_rhs, RenyiEvaluator, RiskRow, TrialSetup,
};
use mdl_relu::rng::{derive_seed, substream};
use mdl_relu::spectral::{
    approx_basis, exact_spectrum, gram_report, leading_spectrum, monte_carlo_fim, write_fimj, ApproxBasis, BasisGroup,
    FimMatrix, Spectrum, SpectrumExport,
};
use mdl_relu::twostage::{kraft_sum, length_bound_check};
use mdl_relu::{BoundBreakdown, CodedBasis};
use serde::Serialize;

use crate::config::{BasisChoice, ExperimentConfig};
use crate::error::CliError;
use crate::output::{side_path, write_csv, write_json, write_with};

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    /// `key=value` lines for the terminal.
    pub lines: Vec<String>,
}

impl RunSummary {
    fn line(&mut self, s: String) {
        self.lines.push(s);
    }
}

// Sub-seeds of the run seed, one per random component.
const SEED_MODEL: u64 = 0;
const SEED_VSTAR: u64 = 1;
const SEED_FIM: u64 = 2;
const SEED_RENYI: u64 = 3;
const SEED_TRIALS: u64 = 4;
const SEED_DATA: u64 = 5;

/// Above this width only the leading eigenpairs are computed.
const FULL_EIGEN_MAX_M: usize = 1500;

fn sample_model(cfg: &ExperimentConfig, seed: u64, m: usize) -> Result<NetworkModel, CliError> {
    Ok(NetworkModel::sample(cfg.d, m, cfg.sigma2, derive_seed(seed, SEED_MODEL))?)
}

fn fim_and_spectrum(
    cfg: &ExperimentConfig,
    model: &NetworkModel,
    seed: u64,
    k: usize,
) -> Result<(FimMatrix, Spectrum), CliError> {
    let fim = monte_carlo_fim(model, cfg.mc_samples, derive_seed(seed, SEED_FIM))?;
    let spectrum =
        if model.m() <= FULL_EIGEN_MAX_M { exact_spectrum(&fim)? } else { leading_spectrum(&fim, k.min(model.m()))? };
    Ok((fim, spectrum))
}

struct Coding {
    basis: CodedBasis,
    /// Top-`D` eigenvalues of the Monte Carlo `J`, for the linear-code bounds.
    exact_lambdas: Vec<f64>,
    trace: f64,
    labels: Vec<String>,
}

fn coding(cfg: &ExperimentConfig, model: &NetworkModel, seed: u64) -> Result<Coding, CliError> {
    let dim = cfg.coded_dim();
    let (fim, spectrum) = fim_and_spectrum(cfg, model, seed, dim + 6)?;
    let exact_lambdas = spectrum.eigenvalues.iter().take(dim).copied().collect();
    let (basis, labels) = match cfg.basis {
        BasisChoice::Exact => {
            let b = CodedBasis::from_spectrum(&spectrum, dim)?;
            (b, (1..=dim).map(|i| format!("u{i}")).collect())
        }
        BasisChoice::Approx => {
            let ab = approx_basis(model)?;
            let gr = gram_report(&ab)?;
            (CodedBasis::from_approx(&ab, &gr), ab.groups.iter().map(BasisGroup::label).collect())
        }
    };
    Ok(Coding { basis, exact_lambdas, trace: fim.trace(), labels })
}

fn group_name(rank: usize, d: usize) -> &'static str {
    let dim = mdl_relu::model::coded_dim(d);
    match rank {
        1 => "norm",
        r if r <= d + 1 => "linear",
        r if r <= 2 * d => "diagonal",
        r if r <= dim => "pair",
        _ => "residual",
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    rank: usize,
    eigenvalue: f64,
    share: f64,
    cumulative_share: f64,
    group: &'static str,
    theory: Option<f64>,
}

pub fn spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let model = sample_model(cfg, seed, cfg.m)?;
    let dim = cfg.coded_dim();
    let shown = (2 * dim).max(dim + 6).min(cfg.m);
    let (fim, spec) = fim_and_spectrum(cfg, &model, seed, shown)?;
    let trace = fim.trace();
    let theory = ApproxBasis::theory_eigenvalues(cfg.d);
    let mut cum = 0.0;
    let rows: Vec<SpectrumRow> = spec
        .eigenvalues
        .iter()
        .take(shown)
        .enumerate()
        .map(|(i, &ev)| {
            cum += ev;
            SpectrumRow {
                rank: i + 1,
                eigenvalue: ev,
                share: ev / trace,
                cumulative_share: cum / trace,
                group: group_name(i + 1, cfg.d),
                theory: theory.get(i).copied(),
            }
        })
        .collect();
    let beta = mdl_relu::spectral::beta_d(&spec, dim)?;
    let eps1 =
        if cfg.m >= mdl_relu::model::coded_dim(cfg.d) { Some(gram_report(&approx_basis(&model)?)?.eps1) } else { None };
    let export = SpectrumExport {
        eigenvalues: rows.iter().map(|r| r.eigenvalue).collect(),
        trace,
        coded_dim: dim,
        eps1,
        beta_at_d: beta,
    };

    let mut summary = RunSummary::default();
    write_csv(out, cfg, &rows)?;
    summary.artifacts.push(out.to_path_buf());
    let json = side_path(out, ".json");
    write_json(&json, cfg, &export)?;
    summary.artifacts.push(json);
    if cfg.save_fim {
        let bin = side_path(out, ".fimj");
        write_with(&bin, |w| Ok(write_fimj(w, fim.matrix())?))?;
        summary.artifacts.push(bin);
    }
    summary.line(format!("trace={trace:.6} (d/2 = {})", cfg.d as f64 / 2.0));
    summary.line(format!("top_{dim}_share={:.6}", 1.0 - beta));
    summary.line(format!("beta_at_D={beta:.6}"));
    summary.line(format!("lambda_1={:.6} theory={:.6}", spec.eigenvalues[0], theory[0]));
    if let Some(e) = eps1 {
        summary.line(format!("eps1={e:.6}"));
    }
    Ok(summary)
}

#[derive(Serialize)]
struct CodeRow {
    index: usize,
    label: String,
    lambda: f64,
    delta: f64,
    q: u64,
    length_nats: f64,
    c: f64,
    length_bound: f64,
    slack: f64,
}

#[derive(Serialize)]
struct CodeTableJson {
    code: mdl_relu::twostage::CodeSpecExport,
    kraft_sum: f64,
    total_length_nats: f64,
    grid_points: f64,
    eps1: f64,
}

pub fn code_table(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let model = sample_model(cfg, seed, cfg.m)?;
    let (basis, labels) = match cfg.basis {
        // The approximate code needs no Monte Carlo.
        BasisChoice::Approx => {
            let ab = approx_basis(&model)?;
            let gr = gram_report(&ab)?;
            (CodedBasis::from_approx(&ab, &gr), ab.groups.iter().map(BasisGroup::label).collect())
        }
        BasisChoice::Exact => {
            let c = coding(cfg, &model, seed)?;
            (c.basis, c.labels)
        }
    };
    let spec = basis.code(cfg.alpha, cfg.sigma2, cfg.n())?;
    let checks = length_bound_check(&spec);
    let rows: Vec<CodeRow> = spec
        .directions
        .iter()
        .zip(&checks)
        .zip(labels)
        .enumerate()
        .map(|(i, ((d, b), label))| CodeRow {
            index: i + 1,
            label,
            lambda: d.lambda,
            delta: d.delta,
            q: d.q,
            length_nats: d.length,
            c: d.c,
            length_bound: b.bound,
            slack: b.slack,
        })
        .collect();
    let kraft = kraft_sum(&spec);
    let body = CodeTableJson {
        code: spec.to_export(),
        kraft_sum: kraft,
        total_length_nats: spec.total_length(),
        grid_points: spec.grid_size(),
        eps1: basis.eps1,
    };
    let mut summary = RunSummary::default();
    write_csv(out, cfg, &rows)?;
    summary.artifacts.push(out.to_path_buf());
    let json = side_path(out, ".json");
    write_json(&json, cfg, &body)?;
    summary.artifacts.push(json);
    summary.line(format!("D={} radius={:.6}", spec.dim(), spec.radius));
    summary.line(format!("kraft_sum={kraft:.15}"));
    summary.line(format!("total_length_nats={:.6} grid_points={:.0}", spec.total_length(), spec.grid_size()));
    Ok(summary)
}

#[derive(Serialize)]
struct EstimateJson {
    estimate: mdl_relu::estimator::MdlEstimateExport,
    v_ddot_error_norm: f64,
    description_length: f64,
    ridge: Option<f64>,
    basis: mdl_relu::BasisKind,
    #[serde(rename = "D")]
    dim: usize,
    eps1: f64,
    radius: f64,
    n: usize,
}

pub fn estimate(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let model = sample_model(cfg, seed, cfg.m)?;
    let vstar = sample_true_param(cfg.m, &mut substream(seed, SEED_VSTAR))?;
    let n = cfg.n();
    let data = generate_dataset(&model, &vstar, n, &mut substream(seed, SEED_DATA))?;
    let c = coding(cfg, &model, seed)?;
    let spec = c.basis.code(cfg.alpha, cfg.sigma2, n)?;
    let problem = reduce(&data, c.basis.rows.view(), cfg.sigma2)?;
    let est = mdl_estimate(&problem, &spec, cfg.alpha, cfg.method)?;
    let diff = &est.v_ddot - &vstar.view();
    let err = diff.dot(&diff).sqrt();
    let body = EstimateJson {
        estimate: est.to_export(),
        v_ddot_error_norm: err,
        description_length: est.description_length(),
        ridge: est.ridge,
        basis: c.basis.kind,
        dim: c.basis.dim(),
        eps1: c.basis.eps1,
        radius: c.basis.radius,
        n,
    };
    let mut summary = RunSummary::default();
    write_json(out, cfg, &body)?;
    summary.artifacts.push(out.to_path_buf());
    let model_path = side_path(out, ".model.json");
    write_with(&model_path, |w| {
        use std::io::Write;
        writeln!(w, "{}", model.to_json()?)?;
        Ok(())
    })?;
    summary.artifacts.push(model_path);
    let data_path = side_path(out, ".data.csv");
    write_with(&data_path, |w| Ok(data.write_csv(w)?))?;
    summary.artifacts.push(data_path);
    summary.line(format!("method={:?} objective={:.6}", est.method, est.objective));
    summary.line(format!("neg_log_lik={:.6} code_length_nats={:.6}", est.neg_log_lik, est.code_length_nats));
    summary.line(format!("v_ddot_error_norm={err:.6} clamped={}", est.clamped));
    Ok(summary)
}

/// Bounds for one sample size: Corollary 1 on the exact eigenvalues and
/// Theorem 3 on the coded ones; `primary` is the one matching the basis.
struct Bounds {
    cor1: BoundBreakdown,
    thm3: BoundBreakdown,
    thm2: BoundBreakdown,
    primary: BoundBreakdown,
}

fn bounds(cfg: &ExperimentConfig, c: &Coding, m: usize, n: usize) -> Result<Bounds, CliError> {
    let thm2 = thm2_rhs(&c.exact_lambdas, c.trace, m, cfg.alpha, cfg.sigma2, n)?;
    let cor1 = cor1_rhs(&c.exact_lambdas, c.trace, m, cfg.alpha, cfg.sigma2, n)?;
    let thm3 = thm3_rhs(&c.basis.lambdas, c.trace, cfg.alpha, cfg.sigma2, n, c.basis.eps1)?;
    let primary = match cfg.basis {
        BasisChoice::Approx => thm3,
        BasisChoice::Exact => cor1,
    };
    Ok(Bounds { cor1, thm3, thm2, primary })
}

#[derive(Serialize)]
struct RedundancyRow {
    n: usize,
    alpha: f64,
    #[serde(rename = "D")]
    dim: usize,
    trials: usize,
    redundancy_mean: f64,
    redundancy_se: f64,
    /// Theorem-2 scale (total nats over `n` samples).
    bound_thm2: f64,
    /// Theorem 3 multiplied by `n`, on the same scale as `bound_thm2`.
    bound_thm3_times_n: f64,
    thm2_term_log: f64,
    thm2_term_c: f64,
    thm2_term_dim: f64,
    thm2_term_tail: f64,
    eps1: f64,
    beta_d: f64,
    trace: f64,
}

pub fn redundancy(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let model = sample_model(cfg, seed, cfg.m)?;
    let vstar = sample_true_param(cfg.m, &mut substream(seed, SEED_VSTAR))?;
    let c = coding(cfg, &model, seed)?;
    let mut summary = RunSummary::default();
    let mut rows = Vec::new();
    for n in cfg.n_list() {
        let b = bounds(cfg, &c, cfg.m, n)?;
        let setup =
            TrialSetup { model: &model, vstar: &vstar, basis: &c.basis, alpha: cfg.alpha, n, method: cfg.method };
        let red = empirical_redundancy(&setup, cfg.trials, derive_seed(seed, SEED_TRIALS))?;
        summary.line(format!("n={n} redundancy={:.6}±{:.6} bound_thm2={:.6}", red.mean, red.se, b.thm2.total));
        rows.push(RedundancyRow {
            n,
            alpha: cfg.alpha,
            dim: c.basis.dim(),
            trials: cfg.trials,
            redundancy_mean: red.mean,
            redundancy_se: red.se,
            bound_thm2: b.thm2.total,
            bound_thm3_times_n: b.thm3.total * n as f64,
            thm2_term_log: b.thm2.term_log,
            thm2_term_c: b.thm2.term_c,
            thm2_term_dim: b.thm2.term_dim,
            thm2_term_tail: b.thm2.term_tail,
            eps1: c.basis.eps1,
            beta_d: b.thm2.beta,
            trace: c.trace,
        });
    }
    write_csv(out, cfg, &rows)?;
    summary.artifacts.push(out.to_path_buf());
    Ok(summary)
}

pub fn risk_curve(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let model = sample_model(cfg, seed, cfg.m)?;
    let vstar = sample_true_param(cfg.m, &mut substream(seed, SEED_VSTAR))?;
    let c = coding(cfg, &model, seed)?;
    let eval = RenyiEvaluator::new(&model, cfg.renyi_samples, derive_seed(seed, SEED_RENYI))?;
    let lambda = cfg.lambda_order();
    let mut summary = RunSummary::default();
    let mut rows = Vec::new();
    for n in cfg.n_list() {
        let b = bounds(cfg, &c, cfg.m, n)?;
        let setup =
            TrialSetup { model: &model, vstar: &vstar, basis: &c.basis, alpha: cfg.alpha, n, method: cfg.method };
        let paired = paired_with(&setup, &eval, lambda, cfg.trials, derive_seed(seed, SEED_TRIALS))?;
        let row = RiskRow::new(cfg.alpha, lambda, &paired, &b.cor1, &b.thm3, &b.primary);
        summary.line(format!(
            "n={n} risk={:.6}±{:.6} redundancy/n={:.6} bound_cor1={:.6} bound_thm3={:.6}",
            row.risk_mean,
            row.risk_se,
            row.redundancy_mean / n as f64,
            row.bound_cor1,
            row.bound_thm3
        ));
        rows.push(row);
    }
    write_csv(out, cfg, &rows)?;
    summary.artifacts.push(out.to_path_buf());
    Ok(summary)
}

#[derive(Serialize)]
struct GramRow {
    m: usize,
    d: usize,
    #[serde(rename = "D")]
    dim: usize,
    eps1: f64,
    norm_g_minus_i: f64,
    norm_g_inv_minus_i: f64,
    condition: f64,
    radius: f64,
    min_row_norm: f64,
    max_row_norm: f64,
}

pub fn gram_check(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let seed = cfg.seed()?;
    let mut summary = RunSummary::default();
    let mut rows = Vec::new();
    for m in cfg.m_list() {
        let model = sample_model(cfg, seed, m)?;
        let ab = approx_basis(&model)?;
        let gr = gram_report(&ab)?;
        let norms = row_norms(&ab.rows);
        let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        summary.line(format!("m={m} eps1={:.6} condition={:.4}", gr.eps1, gr.condition));
        rows.push(GramRow {
            m,
            d: cfg.d,
            dim: ab.dim(),
            eps1: gr.eps1,
            norm_g_minus_i: gr.norm_g_minus_i,
            norm_g_inv_minus_i: gr.norm_g_inv_minus_i,
            condition: gr.condition,
            radius: gr.radius(),
            min_row_norm: lo,
            max_row_norm: hi,
        });
    }
    write_csv(out, cfg, &rows)?;
    summary.artifacts.push(out.to_path_buf());
    Ok(summary)
}
