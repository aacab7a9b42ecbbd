//! The MDL estimator: minimize `−log p_θ(yⁿ|xⁿ) + α·L(θ)` over the
//! quantized grid of coded coordinates.
//!
//! With `v = Σ θᵢu⁽ⁱ⁾` the negative log-likelihood is quadratic in `θ`
//! with Hessian `ZᵀZ/σ²`, where `Z = features·Uᵀ`. Because `L` is the same
//! at every grid point, the minimizer is the grid point closest to the
//! least-squares solution in the `ZᵀZ` metric: a closest-vector problem on
//! a box of lattice points. It is solved exactly by enumeration when the
//! grid is small enough and approximately by nearest-plane rounding
//! otherwise.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Cholesky, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, sym_eigvals};
use crate::model::{gaussian_nll, Dataset};
use crate::twostage::CodeSpec;

/// Largest grid the exhaustive search will enumerate.
pub const EXHAUSTIVE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    NearestPlane,
    /// Exhaustive within [`EXHAUSTIVE_BUDGET`], nearest-plane beyond it.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "nearest_plane" | "nearest-plane" => Ok(Method::NearestPlane),
            "auto" => Ok(Method::Auto),
            other => Err(Error::invalid(format!("unknown estimator method {other:?}"))),
        }
    }
}

/// Regression projected onto the coded directions.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// `zₜᵢ = X⁽ᵗ⁾·u⁽ⁱ⁾`, `n × D`.
    pub z: Array2<f64>,
    pub y: Array1<f64>,
    pub sigma2: f64,
    /// `ZᵀZ`.
    pub gram: Array2<f64>,
    /// `Zᵀy`.
    pub zty: Array1<f64>,
    /// Basis rows `u⁽ⁱ⁾`, kept to map `θ` back to `v`.
    pub basis: Array2<f64>,
}

impl ReducedProblem {
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// `−log p_θ(yⁿ|xⁿ)` evaluated from the residuals.
    pub fn neg_log_lik(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::shape(format!("theta has {} entries, problem has D = {}", theta.len(), self.dim())));
        }
        let theta = ndarray::ArrayView1::from(theta);
        let fitted = self.z.dot(&theta);
        let sq: Vec<f64> = self.y.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).collect();
        Ok(gaussian_nll(pairwise_sum(&sq), self.n(), self.sigma2))
    }

    /// `v = Σ θᵢ u⁽ⁱ⁾`.
    pub fn reconstruct(&self, theta: &[f64]) -> Array1<f64> {
        ndarray::ArrayView1::from(theta).dot(&self.basis)
    }
}

/// Projects the regression onto `span{u⁽ⁱ⁾}`.
pub fn reduce(data: &Dataset, basis_rows: ArrayView2<'_, f64>, sigma2: f64) -> Result<ReducedProblem> {
    if basis_rows.ncols() != data.features().ncols() {
        return Err(Error::shape(format!(
            "basis rows have length {}, features have {} columns",
            basis_rows.ncols(),
            data.features().ncols()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let z = data.features().dot(&basis_rows.t());
    let gram = z.t().dot(&z);
    let gram = (&gram + &gram.t()) * 0.5;
    let y = data.responses().to_owned();
    let zty = z.t().dot(&y);
    Ok(ReducedProblem { z, y, sigma2, gram, zty, basis: basis_rows.to_owned() })
}

/// Unconstrained minimizer of the reduced quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub theta: Array1<f64>,
    /// Ridge added to the normal equations when `ZᵀZ` was singular.
    pub ridge: Option<f64>,
}

/// Condition number above which the normal equations count as singular.
const NORMAL_EQ_MAX_CONDITION: f64 = 1e12;

fn normal_matrix(problem: &ReducedProblem) -> Result<(Array2<f64>, Option<f64>)> {
    let dd = problem.dim();
    let vals = sym_eigvals(&problem.gram)?;
    let (lo, hi) = (vals[0], vals[dd - 1]);
    if hi > 0.0 && lo > hi / NORMAL_EQ_MAX_CONDITION {
        return Ok((problem.gram.clone(), None));
    }
    let trace = problem.gram.diag().sum();
    let ridge = if trace > 0.0 { 1e-10 * trace / dd as f64 } else { 1e-10 };
    let mut h = problem.gram.clone();
    h.diag_mut().mapv_inplace(|x| x + ridge);
    Ok((h, Some(ridge)))
}

/// `θ̂ = argmin Σₜ (yₜ − zₜθ)²`, with a ridge of `1e-10·tr(ZᵀZ)/D` when
/// `ZᵀZ` is singular.
pub fn least_squares(problem: &ReducedProblem) -> Result<LeastSquares> {
    let dd = problem.dim();
    if dd == 0 {
        return Ok(LeastSquares { theta: Array1::zeros(0), ridge: None });
    }
    let (h, ridge) = normal_matrix(problem)?;
    let chol = h.cholesky(UPLO::Upper)?;
    let theta = solve_upper_cholesky(&chol, &problem.zty);
    Ok(LeastSquares { theta, ridge })
}

/// Solves `RᵀR x = b` for upper-triangular `R`.
fn solve_upper_cholesky(r: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut w = Array1::zeros(n);
    for i in 0..n {
        let s: f64 = (0..i).map(|k| r[[k, i]] * w[k]).sum();
        w[i] = (b[i] - s) / r[[i, i]];
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| r[[i, k]] * x[k]).sum();
        x[i] = (w[i] - s) / r[[i, i]];
    }
    x
}

/// Result of the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct MdlEstimate {
    pub theta_hat: Array1<f64>,
    pub theta_ddot: Array1<f64>,
    pub indices: Vec<u64>,
    pub v_ddot: Array1<f64>,
    /// `neg_log_lik + α·code_length_nats`.
    pub objective: f64,
    pub neg_log_lik: f64,
    pub code_length_nats: f64,
    /// The method that actually ran (never `Auto`).
    pub method: Method,
    /// Some coordinate of `θ̂` lay outside the quantization radius.
    pub clamped: bool,
    pub ridge: Option<f64>,
}

impl MdlEstimate {
    pub fn to_export(&self) -> MdlEstimateExport {
        MdlEstimateExport {
            theta_hat: self.theta_hat.to_vec(),
            theta_ddot: self.theta_ddot.to_vec(),
            objective: self.objective,
            neg_log_lik: self.neg_log_lik,
            code_length_nats: self.code_length_nats,
            method: self.method,
            clamped: self.clamped,
        }
    }

    /// Two-stage description length `−log p_θ̈ + L(θ̈)` (penalty weight 1).
    ///
    /// `L` is constant on the grid, so `θ̈` also minimizes this.
    pub fn description_length(&self) -> f64 {
        self.neg_log_lik + self.code_length_nats
    }
}

/// JSON form `{theta_hat, theta_ddot, objective, neg_log_lik,
/// code_length_nats, method, clamped}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlEstimateExport {
    pub theta_hat: Vec<f64>,
    pub theta_ddot: Vec<f64>,
    pub objective: f64,
    pub neg_log_lik: f64,
    pub code_length_nats: f64,
    pub method: Method,
    pub clamped: bool,
}

/// MDL estimate with penalty weight `alpha`, which must be the `α` the
/// code was built with.
pub fn mdl_estimate(problem: &ReducedProblem, spec: &CodeSpec, alpha: f64, method: Method) -> Result<MdlEstimate> {
    if (alpha - spec.alpha).abs() > 1e-12 * spec.alpha {
        return Err(Error::invalid(format!("alpha {alpha} does not match the code's alpha {}", spec.alpha)));
    }
    mdl_estimate_with_penalty(problem, spec, alpha, method)
}

/// Grid minimizer of `−log p + penalty·L` for an arbitrary `penalty ≥ 0`.
pub fn mdl_estimate_with_penalty(
    problem: &ReducedProblem,
    spec: &CodeSpec,
    penalty: f64,
    method: Method,
) -> Result<MdlEstimate> {
    let dd = problem.dim();
    if spec.dim() != dd {
        return Err(Error::shape(format!("code has {} directions, problem has {dd}", spec.dim())));
    }
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::invalid(format!("penalty must be >= 0, got {penalty}")));
    }
    let ls = least_squares(problem)?;
    let method = match method {
        Method::Auto if spec.grid_size() <= EXHAUSTIVE_BUDGET as f64 => Method::Exhaustive,
        Method::Auto => Method::NearestPlane,
        m => m,
    };
    let indices = match method {
        Method::Exhaustive => exhaustive_argmin(problem, spec)?,
        Method::NearestPlane => nearest_plane(problem, spec, &ls)?,
        Method::Auto => unreachable!("resolved above"),
    };
    let theta_ddot = spec.point(&indices)?;
    let neg_log_lik = problem.neg_log_lik(&theta_ddot)?;
    let code_length_nats = spec.total_length();
    let clamped = ls.theta.iter().any(|t| t.abs() > spec.radius);
    Ok(MdlEstimate {
        v_ddot: problem.reconstruct(&theta_ddot),
        theta_hat: ls.theta,
        theta_ddot: Array1::from(theta_ddot),
        indices,
        objective: neg_log_lik + penalty * code_length_nats,
        neg_log_lik,
        code_length_nats,
        method,
        clamped,
        ridge: ls.ridge,
    })
}

/// Enumerates the grid in lexicographic index order and keeps the first
/// strict minimum of `θHθᵀ − 2θ·Zᵀy`.
fn exhaustive_argmin(problem: &ReducedProblem, spec: &CodeSpec) -> Result<Vec<u64>> {
    let points = spec.grid_size();
    if points > EXHAUSTIVE_BUDGET as f64 {
        return Err(Error::BudgetExceeded { points, budget: EXHAUSTIVE_BUDGET });
    }
    let dd = spec.dim();
    let grids: Vec<Vec<f64>> = spec.directions.iter().map(|d| d.grid()).collect();
    let h = &problem.gram;
    let b = &problem.zty;
    let mut idx = vec![0u64; dd];
    let mut theta: Vec<f64> = grids.iter().map(|g| g[0]).collect();
    let mut best = f64::INFINITY;
    let mut best_idx = idx.clone();
    loop {
        let mut val = 0.0;
        for i in 0..dd {
            let mut hi = 0.0;
            for j in 0..dd {
                hi += h[[i, j]] * theta[j];
            }
            val += theta[i] * (hi - 2.0 * b[i]);
        }
        if val < best {
            best = val;
            best_idx.copy_from_slice(&idx);
        }
        // Last coordinate fastest, so the scan is lexicographic.
        let mut i = dd;
        loop {
            if i == 0 {
                return Ok(best_idx);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < spec.directions[i].q {
                theta[i] = grids[i][idx[i] as usize];
                break;
            }
            idx[i] = 0;
            theta[i] = grids[i][0];
        }
    }
}

/// Babai nearest-plane rounding in the `ZᵀZ` metric.
///
/// Coordinates are fixed in decreasing-`λ` order. Each one is rounded at
/// its optimum given the coordinates already fixed, with the rest free;
/// that is back-substitution on the Cholesky factor of `ZᵀZ` permuted so
/// the first coordinate to fix comes last.
fn nearest_plane(problem: &ReducedProblem, spec: &CodeSpec, ls: &LeastSquares) -> Result<Vec<u64>> {
    let dd = spec.dim();
    if dd == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..dd).collect();
    order.sort_by(|&a, &b| spec.directions[b].lambda.total_cmp(&spec.directions[a].lambda));
    let perm: Vec<usize> = order.iter().rev().copied().collect();
    let (h, _) = normal_matrix(problem)?;
    let hp = Array2::from_shape_fn((dd, dd), |(a, b)| h[[perm[a], perm[b]]]);
    let r = hp.cholesky(UPLO::Upper)?;
    let center: Vec<f64> = perm.iter().map(|&p| ls.theta[p]).collect();
    let mut fixed = vec![0.0; dd];
    let mut out = vec![0u64; dd];
    for a in (0..dd).rev() {
        let shift: f64 = (a + 1..dd).map(|b| r[[a, b]] * (fixed[b] - center[b])).sum();
        let target = center[a] - shift / r[[a, a]];
        let dir = &spec.directions[perm[a]];
        let k = dir.nearest_index(target);
        fixed[a] = dir.point(k);
        out[perm[a]] = k;
    }
    Ok(out)
}

/// `L_α(yⁿ|xⁿ)` together with the two-stage description length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LAlpha {
    /// `−log p_θ̈ + α·L(θ̈)`.
    pub value: f64,
    /// `min_θ (−log p_θ + L(θ))`, the `α = 1` value on the same grid.
    pub description_length: f64,
}

pub fn l_alpha(
    data: &Dataset,
    spec: &CodeSpec,
    basis_rows: ArrayView2<'_, f64>,
    alpha: f64,
    method: Method,
) -> Result<LAlpha> {
    let problem = reduce(data, basis_rows, spec.sigma2)?;
    let est = mdl_estimate(&problem, spec, alpha, method)?;
    Ok(LAlpha { value: est.objective, description_length: est.description_length() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_dataset_with_noise, NetworkModel, TrueParam};
    use crate::rng::seeded;
    use crate::twostage::build_code;
    use approx::assert_relative_eq;
    use ndarray::{array, s};

    fn problem_from(z: Array2<f64>, y: Array1<f64>) -> ReducedProblem {
        let d = z.ncols();
        let gram = z.t().dot(&z);
        let zty = z.t().dot(&y);
        ReducedProblem { z, y, sigma2: 1.0, gram, zty, basis: Array2::eye(d) }
    }

    #[test]
    fn reduce_with_identity_rows_selects_columns() {
        let model = NetworkModel::sample(2, 6, 1.0, 1).unwrap();
        let data = generate_dataset_with_noise(&model, &TrueParam::zeros(6), 20, 1.0, &mut seeded(2)).unwrap();
        let eye = Array2::<f64>::eye(6);
        let p = reduce(&data, eye.slice(s![..3, ..]), 1.0).unwrap();
        assert_eq!(p.z, data.features().slice(s![.., ..3]).to_owned());
        assert!(reduce(&data, Array2::<f64>::eye(5).view(), 1.0).is_err());
    }

    #[test]
    fn reduce_norm_bound() {
        let model = NetworkModel::sample(3, 10, 1.0, 1).unwrap();
        let data = generate_dataset_with_noise(&model, &TrueParam::zeros(10), 40, 1.0, &mut seeded(2)).unwrap();
        let u = crate::model::sample_weights(4, 10, &mut seeded(5)).unwrap();
        let p = reduce(&data, u.view(), 1.0).unwrap();
        let fro = |a: &Array2<f64>| a.mapv(|x| x * x).sum().sqrt();
        let op = crate::linalg::spectral_norm_sym(&u.dot(&u.t())).unwrap().sqrt();
        assert!(fro(&p.z) <= fro(&data.features().to_owned()) * op * (1.0 + 1e-12));
    }

    #[test]
    fn orthonormal_full_basis_preserves_residuals() {
        let model = NetworkModel::sample(2, 5, 1.0, 3).unwrap();
        let vstar = crate::model::sample_true_param(5, &mut seeded(1)).unwrap();
        let data = generate_dataset_with_noise(&model, &vstar, 60, 0.3, &mut seeded(2)).unwrap();
        let (_, q) = crate::linalg::sym_eigen_desc(&{
            let a = crate::model::sample_weights(5, 5, &mut seeded(9)).unwrap();
            a.t().dot(&a)
        })
        .unwrap();
        let p = reduce(&data, q.view(), 0.3).unwrap();
        let theta = least_squares(&p).unwrap().theta;
        let v = p.reconstruct(theta.as_slice().unwrap());
        let direct = reduce(&data, Array2::<f64>::eye(5).view(), 0.3).unwrap();
        let vhat = least_squares(&direct).unwrap().theta;
        for (a, b) in v.iter().zip(vhat.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn mean_of_two_points() {
        let p = problem_from(array![[1.0], [1.0]], array![1.0, 3.0]);
        let ls = least_squares(&p).unwrap();
        assert_relative_eq!(ls.theta[0], 2.0, epsilon = 1e-14);
        assert!(ls.ridge.is_none());
    }

    #[test]
    fn noiseless_interpolation_and_orthogonality() {
        let model = NetworkModel::sample(2, 30, 1.0, 3).unwrap();
        let u = crate::model::sample_weights(4, 30, &mut seeded(9)).unwrap();
        let theta_star = array![0.2, -0.1, 0.05, 0.3];
        let vstar = TrueParam::new(theta_star.dot(&u)).unwrap();
        let data = generate_dataset_with_noise(&model, &vstar, 200, 0.0, &mut seeded(2)).unwrap();
        let p = reduce(&data, u.view(), 1.0).unwrap();
        let ls = least_squares(&p).unwrap();
        for (a, b) in ls.theta.iter().zip(theta_star.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-8);
        }
        let noisy = generate_dataset_with_noise(&model, &vstar, 200, 1.0, &mut seeded(3)).unwrap();
        let p = reduce(&noisy, u.view(), 1.0).unwrap();
        let ls = least_squares(&p).unwrap();
        let resid = &p.y - &p.z.dot(&ls.theta);
        let ortho = p.z.t().dot(&resid);
        let scale = p.z.t().dot(&p.y).mapv(f64::abs).sum();
        assert!(ortho.mapv(f64::abs).sum() <= 1e-8 * scale);
    }

    #[test]
    fn least_squares_is_brute_force_minimum() {
        let z = array![[1.0, 0.3], [0.2, 1.0], [0.5, -0.4], [1.2, 0.8]];
        let y = array![0.7, -0.2, 0.4, 1.1];
        let p = problem_from(z.clone(), y.clone());
        let ls = least_squares(&p).unwrap();
        let rss = |a: f64, b: f64| {
            let r = &y - &z.dot(&array![a, b]);
            r.dot(&r)
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -2000..=2000 {
            for j in -2000..=2000 {
                let (a, b) = (i as f64 * 1e-3, j as f64 * 1e-3);
                let v = rss(a, b);
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        assert!(rss(ls.theta[0], ls.theta[1]) <= best.0);
        assert!((ls.theta[0] - best.1).abs() <= 1e-3);
        assert!((ls.theta[1] - best.2).abs() <= 1e-3);
    }

    #[test]
    fn singular_normal_equations_get_ridge() {
        let p = problem_from(array![[1.0, 1.0], [2.0, 2.0]], array![1.0, 2.0]);
        let ls = least_squares(&p).unwrap();
        assert!(ls.ridge.is_some());
        assert!(ls.theta.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn diagonal_problem_is_separable() {
        let z = array![[2.0, 0.0], [0.0, 1.0], [0.0, 0.5]];
        let y = array![0.9, -0.3, 0.2];
        let p = problem_from(z, y);
        let spec = build_code(&[4.0, 1.25], 2.0, 1.0, 40, 1.0).unwrap();
        let ex = mdl_estimate(&p, &spec, 2.0, Method::Exhaustive).unwrap();
        let np = mdl_estimate(&p, &spec, 2.0, Method::NearestPlane).unwrap();
        let q = crate::twostage::quantize_point(&spec, ls_slice(&p).as_slice()).unwrap();
        assert_eq!(ex.indices, np.indices);
        assert_eq!(ex.indices, q.indices);
        assert_eq!(ex.method, Method::Exhaustive);
        assert_eq!(np.method, Method::NearestPlane);
    }

    fn ls_slice(p: &ReducedProblem) -> Vec<f64> {
        least_squares(p).unwrap().theta.to_vec()
    }

    #[test]
    fn on_grid_truth_is_recovered() {
        let model = NetworkModel::sample(2, 12, 1.0, 4).unwrap();
        let u = crate::model::sample_weights(3, 12, &mut seeded(6)).unwrap() * 0.25;
        let spec = build_code(&[0.5, 0.3, 0.2], 2.0, 1.0, 100, 1.0).unwrap();
        let theta_star = spec.point(&[1, 2, 0]).unwrap();
        let vstar = TrueParam::new(ndarray::ArrayView1::from(&theta_star).dot(&u)).unwrap();
        let data = generate_dataset_with_noise(&model, &vstar, 100, 0.0, &mut seeded(1)).unwrap();
        let p = reduce(&data, u.view(), 1.0).unwrap();
        for m in [Method::Exhaustive, Method::NearestPlane] {
            let est = mdl_estimate(&p, &spec, 2.0, m).unwrap();
            assert_eq!(est.indices, vec![1, 2, 0]);
            for (a, b) in est.theta_ddot.iter().zip(&theta_star) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn penalty_identity_and_export() {
        let p = problem_from(array![[1.0, 0.1], [0.2, 1.0], [0.3, 0.3]], array![0.5, -0.5, 0.1]);
        let spec = build_code(&[1.0, 1.0], 3.0, 1.0, 50, 1.0).unwrap();
        let est = mdl_estimate(&p, &spec, 3.0, Method::Auto).unwrap();
        assert_eq!(est.objective - est.neg_log_lik, 3.0 * est.code_length_nats);
        assert_relative_eq!(est.objective - est.neg_log_lik, 3.0 * est.code_length_nats, epsilon = 1e-12);
        let json = serde_json::to_value(est.to_export()).unwrap();
        assert_eq!(json["method"], "exhaustive");
        for key in ["theta_hat", "theta_ddot", "objective", "neg_log_lik", "code_length_nats", "clamped"] {
            assert!(json.get(key).is_some());
        }
        assert!(mdl_estimate(&p, &spec, 2.0, Method::Auto).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let p = problem_from(Array2::eye(8), Array1::zeros(8));
        let spec = build_code(&[1.0; 8], 2.0, 1.0, 100_000, 1.0).unwrap();
        assert!(spec.grid_size() > EXHAUSTIVE_BUDGET as f64);
        assert!(matches!(mdl_estimate(&p, &spec, 2.0, Method::Exhaustive), Err(Error::BudgetExceeded { .. })));
        let est = mdl_estimate(&p, &spec, 2.0, Method::Auto).unwrap();
        assert_eq!(est.method, Method::NearestPlane);
    }

    #[test]
    fn l_alpha_relations() {
        let model = NetworkModel::sample(2, 10, 1.0, 4).unwrap();
        let vstar = crate::model::sample_true_param(10, &mut seeded(2)).unwrap();
        let data = generate_dataset_with_noise(&model, &vstar, 80, 1.0, &mut seeded(3)).unwrap();
        let u = crate::model::sample_weights(3, 10, &mut seeded(6)).unwrap();
        let spec = build_code(&[0.5, 0.3, 0.2], 2.0, 1.0, 80, 1.0).unwrap();
        let la = l_alpha(&data, &spec, u.view(), 2.0, Method::Exhaustive).unwrap();
        assert_relative_eq!(la.value - la.description_length, spec.total_length(), epsilon = 1e-9);

        // On a fixed grid the penalized minimum is nondecreasing in α.
        let p = reduce(&data, u.view(), 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for a in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let v = mdl_estimate_with_penalty(&p, &spec, a, Method::Exhaustive).unwrap().objective;
            assert!(v >= prev);
            prev = v;
        }
        let one = mdl_estimate_with_penalty(&p, &spec, 1.0, Method::Exhaustive).unwrap();
        assert_relative_eq!(one.objective, la.description_length, epsilon = 1e-12);
    }

    #[test]
    fn single_point_grid_gives_zero_parameter_likelihood() {
        let model = NetworkModel::sample(2, 10, 1.0, 4).unwrap();
        let data = generate_dataset_with_noise(&model, &TrueParam::zeros(10), 50, 1.0, &mut seeded(3)).unwrap();
        let u = crate::model::sample_weights(2, 10, &mut seeded(6)).unwrap();
        let spec = build_code(&[1e-9, 1e-9], 2.0, 1.0, 50, 1.0).unwrap();
        let la = l_alpha(&data, &spec, u.view(), 2.0, Method::Auto).unwrap();
        let p0 = crate::model::neg_log_likelihood(Array1::zeros(10).view(), &data, 1.0).unwrap();
        assert_relative_eq!(la.value, p0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn exhaustive_is_optimal(seed in 0u64..10_000, dd in 1usize..=4, n in 20usize..80) {
            let mut rng = seeded(seed);
            let z = crate::model::sample_weights(n, dd, &mut rng).unwrap() * (dd as f64).sqrt();
            let y = Array1::from_shape_simple_fn(n, || rand::Rng::random_range(&mut rng, -1.0..1.0));
            let p = problem_from(z, y);
            let lambdas: Vec<f64> = (0..dd).map(|i| p.gram[[i, i]] / n as f64).collect();
            let spec = build_code(&lambdas, 2.0, 1.0, 6, 1.0).unwrap();
            proptest::prop_assume!(spec.directions.iter().all(|d| d.q <= 5));
            let est = mdl_estimate(&p, &spec, 2.0, Method::Exhaustive).unwrap();
            let mut idx = vec![0u64; dd];
            loop {
                let g = spec.point(&idx).unwrap();
                proptest::prop_assert!(est.neg_log_lik <= p.neg_log_lik(&g).unwrap() + 1e-9);
                let mut i = 0;
                while i < dd {
                    idx[i] += 1;
                    if idx[i] < spec.directions[i].q { break; }
                    idx[i] = 0;
                    i += 1;
                }
                if i == dd { break; }
            }
        }
    }
}
