use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coded_dim, NetworkModel};

/// Relative residual norm below which Gram–Schmidt drops a vector.
pub const GS_DROP_TOL: f64 = 1e-6;

/// Which analytic family a basis row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BasisGroup {
    /// `v⁽⁰⁾ᵢ = ‖W⁽ⁱ⁾‖/√d`.
    Norm,
    /// Row `l` (0-based) of `W`.
    Linear { l: usize },
    /// Orthonormalized combination `s` of the diagonal-pair vectors.
    Diagonal { s: usize },
    /// `v⁽ᵅᵝ⁾ᵢ = √d·W_αi·W_βi/‖W⁽ⁱ⁾‖` for `α < β` (0-based).
    Pair { alpha: usize, beta: usize },
}

impl BasisGroup {
    pub fn label(&self) -> String {
        match *self {
            BasisGroup::Norm => "v0".into(),
            BasisGroup::Linear { l } => format!("W{}", l + 1),
            BasisGroup::Diagonal { s } => format!("vbar{}", s + 1),
            BasisGroup::Pair { alpha, beta } => format!("v{},{}", alpha + 1, beta + 1),
        }
    }
}

/// The `D = d(d+3)/2` analytic directions that carry almost all of the
/// trace of `J`, with their approximate eigenvalues.
///
/// Row order: `v⁽⁰⁾`, `W₁…W_d`, `v̄⁽¹⁾…v̄⁽ᵈ⁻¹⁾`, then `v⁽ᵅᵝ⁾` for `α < β`
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct ApproxBasis {
    pub d: usize,
    pub rows: Array2<f64>,
    pub groups: Vec<BasisGroup>,
    pub approx_eigenvalues: Array1<f64>,
}

impl ApproxBasis {
    /// Number of coded directions `D`.
    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn m(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    /// The grouped approximate eigenvalues for input dimension `d`:
    /// `(2d+1)/(4π)`, then `1/4` (`d` times), then `1/(2πd)`.
    pub fn theory_eigenvalues(d: usize) -> Array1<f64> {
        let dd = coded_dim(d);
        let df = d as f64;
        Array1::from_shape_fn(dd, |i| {
            if i == 0 {
                (2.0 * df + 1.0) / (4.0 * PI)
            } else if i <= d {
                0.25
            } else {
                1.0 / (2.0 * PI * df)
            }
        })
    }
}

/// Builds the analytic approximate eigenbasis of `J` for `model`.
///
/// The `d` vectors `v⁽ᵞ⁾ = (v⁽ᵞᵞ⁾ − v⁽⁰⁾)/√2` sum to zero, so their span
/// has dimension `d − 1`; modified Gram–Schmidt (two passes) extracts an
/// orthonormal basis of it, dropping vectors whose residual falls below
/// [`GS_DROP_TOL`] of their original norm. Vectors shorter than
/// `1e-12·‖v⁽⁰⁾‖` count as zero (at `d = 1` the single `v⁽¹⁾` vanishes
/// up to rounding).
pub fn approx_basis(model: &NetworkModel) -> Result<ApproxBasis> {
    let w = model.weights();
    let (d, m) = w.dim();
    let norms = model.column_norms();
    if let Some(i) = norms.iter().position(|&c| c == 0.0) {
        return Err(Error::ZeroColumn(i));
    }
    let sqrt_d = (d as f64).sqrt();
    let v0 = norms.mapv(|c| c / sqrt_d);
    let pair =
        |a: usize, b: usize| -> Array1<f64> { Array1::from_shape_fn(m, |i| sqrt_d * w[[a, i]] * w[[b, i]] / norms[i]) };

    let v0_norm = v0.dot(&v0).sqrt();
    let mut diag: Vec<Array1<f64>> = Vec::with_capacity(d.saturating_sub(1));
    for g in 0..d {
        let vg = (pair(g, g) - &v0) / std::f64::consts::SQRT_2;
        let original = vg.dot(&vg).sqrt();
        if original <= 1e-12 * v0_norm {
            continue;
        }
        let mut r = vg;
        for _ in 0..2 {
            for q in &diag {
                let c = q.dot(&r);
                r.scaled_add(-c, q);
            }
        }
        let rn = r.dot(&r).sqrt();
        if rn < GS_DROP_TOL * original {
            continue;
        }
        diag.push(r / rn);
    }
    if diag.len() != d - 1 {
        return Err(Error::BasisRank { expected: d - 1, found: diag.len() });
    }

    let dd = coded_dim(d);
    let mut rows = Array2::zeros((dd, m));
    let mut groups = Vec::with_capacity(dd);
    rows.row_mut(0).assign(&v0);
    groups.push(BasisGroup::Norm);
    for l in 0..d {
        rows.row_mut(1 + l).assign(&w.row(l));
        groups.push(BasisGroup::Linear { l });
    }
    for (s, v) in diag.iter().enumerate() {
        rows.row_mut(1 + d + s).assign(v);
        groups.push(BasisGroup::Diagonal { s });
    }
    let mut k = 2 * d;
    for alpha in 0..d {
        for beta in alpha + 1..d {
            rows.row_mut(k).assign(&pair(alpha, beta));
            groups.push(BasisGroup::Pair { alpha, beta });
            k += 1;
        }
    }
    debug_assert_eq!(k, dd);
    Ok(ApproxBasis { d, rows, groups, approx_eigenvalues: ApproxBasis::theory_eigenvalues(d) })
}

/// `Σ λᵢ u⁽ⁱ⁾ᵀu⁽ⁱ⁾` over the basis rows.
pub(crate) fn weighted_outer_sum(basis: &ApproxBasis) -> Array2<f64> {
    let scaled = &basis.rows * &basis.approx_eigenvalues.view().insert_axis(Axis(1));
    basis.rows.t().dot(&scaled)
}
