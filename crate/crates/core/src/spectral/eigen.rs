use ndarray::{s, Array1, Array2};
use ndarray_linalg::QRInto;
use rand_distr::{Distribution, StandardNormal};

use super::fim::FimMatrix;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;

/// Eigenvalues `λ₁ ≥ λ₂ ≥ …` of `J` with orthonormal eigenvectors as rows.
///
/// A spectrum from [`leading_spectrum`] holds only the top `k` pairs;
/// `trace` is always the trace of the full matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub trace: f64,
    /// Dimension of the matrix the spectrum came from.
    pub m: usize,
}

impl Spectrum {
    pub fn is_complete(&self) -> bool {
        self.eigenvalues.len() == self.m
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Σ λᵢ u⁽ⁱ⁾ᵀu⁽ⁱ⁾` over the stored pairs.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(ndarray::Axis(1));
        self.eigenvectors.t().dot(&scaled)
    }
}

/// Full symmetric eigendecomposition, eigenvalues descending.
pub fn exact_spectrum(fim: &FimMatrix) -> Result<Spectrum> {
    let (eigenvalues, eigenvectors) = sym_eigen_desc(fim.matrix())?;
    Ok(Spectrum { eigenvalues, eigenvectors, trace: fim.trace(), m: fim.m() })
}

const SUBSPACE_MAX_ITERS: usize = 2000;
const SUBSPACE_TOL: f64 = 1e-11;

/// Top `k` eigenpairs by block subspace iteration with Rayleigh–Ritz.
///
/// Costs `O(m²·k)` per sweep instead of the `O(m³)` of a full
/// decomposition. Converged when every wanted Ritz pair has residual
/// `‖Ju − θu‖ ≤ 1e-11·λ₁`.
pub fn leading_spectrum(fim: &FimMatrix, k: usize) -> Result<Spectrum> {
    let m = fim.m();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("need 1 <= k <= m = {m}, got k = {k}")));
    }
    let block = m.min(k + (k / 2).max(10));
    if block == m {
        let mut full = exact_spectrum(fim)?;
        full.eigenvalues = full.eigenvalues.slice(s![..k]).to_owned();
        full.eigenvectors = full.eigenvectors.slice(s![..k, ..]).to_owned();
        return Ok(full);
    }
    let j = fim.matrix();
    let scale = j.diag().iter().fold(0.0_f64, |a, &x| a.max(x));
    if scale == 0.0 {
        return Ok(Spectrum {
            eigenvalues: Array1::zeros(k),
            eigenvectors: Array2::eye(m).slice(s![..k, ..]).to_owned(),
            trace: 0.0,
            m,
        });
    }
    let mut rng = crate::rng::seeded(0x5EED_5EED);
    let start: Array2<f64> = Array2::from_shape_simple_fn((m, block), || StandardNormal.sample(&mut rng));
    let (mut q, _) = start.qr_into()?;
    for _ in 0..SUBSPACE_MAX_ITERS {
        let y = j.dot(&q);
        let t = q.t().dot(&y);
        let t = (&t + &t.t()) * 0.5;
        let (theta, s_rows) = sym_eigen_desc(&t)?;
        let s_cols = s_rows.t();
        let ritz = q.dot(&s_cols);
        let jritz = y.dot(&s_cols);
        let tol = SUBSPACE_TOL * theta[0].abs().max(scale * 1e-3);
        let converged = (0..k).all(|i| {
            let r = &jritz.column(i) - &(&ritz.column(i) * theta[i]);
            r.dot(&r).sqrt() <= tol
        });
        if converged {
            return Ok(Spectrum {
                eigenvalues: theta.slice(s![..k]).to_owned(),
                eigenvectors: ritz.slice(s![.., ..k]).t().to_owned(),
                trace: fim.trace(),
                m,
            });
        }
        q = jritz.qr_into()?.0;
    }
    Err(Error::NoConvergence(format!(
        "subspace iteration for the top {k} eigenpairs did not converge in {SUBSPACE_MAX_ITERS} sweeps"
    )))
}

/// `β_D = 1 − (Σ_{i≤D} λᵢ)/tr(J)`, the trace fraction outside the top `D`.
///
/// Negative eigenvalues (numerical noise on a PSD matrix) count as zero,
/// which keeps `β_D` nonincreasing in `D`; `β_m = 0` exactly.
pub fn beta_d(spectrum: &Spectrum, d: usize) -> Result<f64> {
    if d == 0 || d > spectrum.len() {
        return Err(Error::invalid(format!("D must be in 1..={}, got {d}", spectrum.len())));
    }
    if !(spectrum.trace > 0.0) {
        return Err(Error::Degenerate(format!("trace of J is {}", spectrum.trace)));
    }
    if d == spectrum.m {
        return Ok(0.0);
    }
    let head: f64 = spectrum.eigenvalues.iter().take(d).map(|&l| l.max(0.0)).sum();
    Ok((1.0 - head / spectrum.trace).clamp(0.0, 1.0))
}
