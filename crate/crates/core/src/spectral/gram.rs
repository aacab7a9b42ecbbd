use ndarray::{Array1, Array2};

use super::basis::{weighted_outer_sum, ApproxBasis};
use super::fim::{FimMatrix, FimSource};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;

/// Largest Gram condition number accepted by [`gram_report`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// How far the analytic basis is from orthonormal, plus its dual basis.
#[derive(Debug, Clone)]
pub struct GramReport {
    /// `gᵢⱼ = u⁽ⁱ⁾·u⁽ʲ⁾`.
    pub g: Array2<f64>,
    pub g_inv: Array2<f64>,
    pub norm_g_minus_i: f64,
    pub norm_g_inv_minus_i: f64,
    /// `max(‖G − I‖₂, ‖G⁻¹ − I‖₂)`.
    pub eps1: f64,
    pub condition: f64,
    /// Rows `ũ⁽ⁱ⁾ = Σⱼ (G⁻¹)ᵢⱼ u⁽ʲ⁾`, so that `u⁽ⁱ⁾·ũ⁽ʲ⁾ = δᵢⱼ`.
    pub dual_rows: Array2<f64>,
}

impl GramReport {
    /// Quantization radius `√(1 + ε₁)` for coordinates of the unit ball.
    pub fn radius(&self) -> f64 {
        (1.0 + self.eps1).sqrt()
    }
}

pub fn gram_report(basis: &ApproxBasis) -> Result<GramReport> {
    gram_report_for_rows(&basis.rows)
}

pub(crate) fn gram_report_for_rows(rows: &Array2<f64>) -> Result<GramReport> {
    let g = rows.dot(&rows.t());
    let g = (&g + &g.t()) * 0.5;
    let (vals, vecs) = sym_eigen_desc(&g)?;
    let dd = vals.len();
    let (hi, lo) = (vals[0], vals[dd - 1]);
    if !(lo > 0.0) || hi / lo > MAX_GRAM_CONDITION {
        return Err(Error::SingularGram(if lo > 0.0 { hi / lo } else { f64::INFINITY }));
    }
    let inv_vals: Array1<f64> = vals.mapv(|l| 1.0 / l);
    let scaled = &vecs * &inv_vals.view().insert_axis(ndarray::Axis(1));
    let g_inv = vecs.t().dot(&scaled);
    let norm_g_minus_i = vals.iter().fold(0.0_f64, |a, l| a.max((l - 1.0).abs()));
    let norm_g_inv_minus_i = inv_vals.iter().fold(0.0_f64, |a, l| a.max((l - 1.0).abs()));
    let dual_rows = g_inv.dot(rows);
    Ok(GramReport {
        g,
        g_inv,
        norm_g_minus_i,
        norm_g_inv_minus_i,
        eps1: norm_g_minus_i.max(norm_g_inv_minus_i),
        condition: hi / lo,
        dual_rows,
    })
}

/// `Σ_{i≤D} λᵢ u⁽ⁱ⁾ᵀu⁽ⁱ⁾ + R`, with `R` left out when `None`.
pub fn analytic_fim_reconstruction(basis: &ApproxBasis, residual: Option<&Array2<f64>>) -> Result<FimMatrix> {
    let mut j = weighted_outer_sum(basis);
    if let Some(r) = residual {
        if r.dim() != j.dim() {
            return Err(Error::shape(format!("R is {:?}, expected {:?}", r.dim(), j.dim())));
        }
        j += r;
    }
    // Round-off from the two products can break exact symmetry.
    let j = (&j + &j.t()) * 0.5;
    FimMatrix::new(j, FimSource::AnalyticReconstruction, 0)
}
