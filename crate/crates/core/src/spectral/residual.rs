use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::NetworkModel;

/// Relative tail tolerance for the residual series.
pub const R_SERIES_REL_TOL: f64 = 1e-12;
/// Hard cap on the number of series terms.
pub const R_SERIES_MAX_TERMS: usize = 200;

/// Value of `Σ_{n≥1} C(2n,n)·ρ^{2n+2} / (4ⁿ(2n+1)(2n+2))` and the number of
/// terms summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSeries {
    pub sum: f64,
    pub terms: usize,
}

/// Sums the residual series in the column cosine `ρ`.
///
/// Stops once the next term is at most `rel_tol` times the partial sum, or
/// after [`R_SERIES_MAX_TERMS`] terms. At `|ρ| = 1` the terms decay only
/// like `n^{-5/2}` and the cap is what ends the sum.
pub fn residual_series(rho: f64, rel_tol: f64) -> ResidualSeries {
    let r2 = rho * rho;
    if r2 == 0.0 {
        return ResidualSeries { sum: 0.0, terms: 0 };
    }
    // n = 1 term: C(2,1)/(4·3·4) = 1/24.
    let mut term = r2 * r2 / 24.0;
    let mut sum = 0.0;
    let mut n = 1usize;
    loop {
        sum += term;
        if n == R_SERIES_MAX_TERMS {
            break;
        }
        let nf = n as f64;
        // t_{n+1}/t_n = ρ²(2n+1)²/((2n+3)(2n+4)).
        let next = term * r2 * (2.0 * nf + 1.0).powi(2) / ((2.0 * nf + 3.0) * (2.0 * nf + 4.0));
        if next <= rel_tol * sum {
            break;
        }
        term = next;
        n += 1;
    }
    ResidualSeries { sum, terms: n }
}

/// Entrywise residual matrix
/// `R_ij = (‖W⁽ⁱ⁾‖‖W⁽ʲ⁾‖/2π)·Σ_{n≥1} C(2n,n)ρᵢⱼ^{2n+2}/(4ⁿ(2n+1)(2n+2))`
/// with `ρᵢⱼ` the cosine between columns `i` and `j` of `W`.
pub fn residual_matrix(model: &NetworkModel, rel_tol: f64) -> Result<Array2<f64>> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must be in (0, 1), got {rel_tol}")));
    }
    let norms = model.column_norms();
    if let Some(i) = norms.iter().position(|&c| c == 0.0) {
        return Err(Error::ZeroColumn(i));
    }
    let w = model.weights();
    let dots = w.t().dot(&w);
    let m = model.m();
    let mut r = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let scale = norms[i] * norms[j];
            let mut rho = dots[[i, j]] / scale;
            if rho.abs() > 1.0 {
                if rho.abs() - 1.0 > 1e-9 {
                    return Err(Error::Series(format!("column cosine {rho} for ({i}, {j}) is outside [-1, 1]")));
                }
                rho = rho.clamp(-1.0, 1.0);
            }
            let v = scale / (2.0 * PI) * residual_series(rho, rel_tol).sum;
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    Ok(r)
}
