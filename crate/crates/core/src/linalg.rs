//! Dense linear-algebra helpers shared by the numerical modules.

use cblas_sys::{cblas_dsyrk, CBLAS_LAYOUT, CBLAS_TRANSPOSE, CBLAS_UPLO};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `acc += blockᵀ·block`, touching only the upper triangle of `acc`.
///
/// `block` is `k × m` and `acc` is `m × m`; both must be in standard
/// (row-major, contiguous) layout.
pub fn syrk_upper_accumulate(acc: &mut Array2<f64>, block: ArrayView2<'_, f64>) -> Result<()> {
    let (k, m) = block.dim();
    if acc.dim() != (m, m) {
        return Err(Error::shape(format!("accumulator is {:?}, block has {m} columns", acc.dim())));
    }
    if k == 0 || m == 0 {
        return Ok(());
    }
    let a = block.as_slice().ok_or_else(|| Error::shape("block is not contiguous"))?;
    let c = acc.as_slice_mut().ok_or_else(|| Error::shape("accumulator is not contiguous"))?;
    let (n, k) = (to_int(m)?, to_int(k)?);
    // SAFETY: both slices are contiguous row-major with the leading
    // dimensions passed below; dsyrk writes only the upper triangle of C.
    unsafe {
        cblas_dsyrk(
            CBLAS_LAYOUT::CblasRowMajor,
            CBLAS_UPLO::CblasUpper,
            CBLAS_TRANSPOSE::CblasTrans,
            n,
            k,
            1.0,
            a.as_ptr(),
            n,
            1.0,
            c.as_mut_ptr(),
            n,
        );
    }
    Ok(())
}

fn to_int(x: usize) -> Result<i32> {
    i32::try_from(x).map_err(|_| Error::invalid(format!("dimension {x} too large for BLAS")))
}

/// Copy the upper triangle onto the lower one.
pub fn fill_lower_from_upper(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            a[[i, j]] = a[[j, i]];
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Eigenvectors are returned as the rows of the second matrix.
pub fn sym_eigen_desc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = a.eigh(UPLO::Upper).map_err(|e| Error::NoConvergence(e.to_string()))?;
    let n = vals.len();
    let mut out_vals = Array1::zeros(n);
    let mut rows = Array2::zeros((n, n));
    for (k, src) in (0..n).rev().enumerate() {
        out_vals[k] = vals[src];
        rows.row_mut(k).assign(&vecs.column(src));
    }
    Ok((out_vals, rows))
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigvals(a: &Array2<f64>) -> Result<Array1<f64>> {
    a.eigvalsh(UPLO::Upper).map_err(|e| Error::NoConvergence(e.to_string()))
}

/// Spectral norm `max |eigenvalue|` of a symmetric matrix.
pub fn spectral_norm_sym(a: &Array2<f64>) -> Result<f64> {
    Ok(sym_eigvals(a)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Relative Frobenius distance `‖a − b‖_F / ‖b‖_F`.
pub fn rel_frobenius(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff = (a - b).mapv(|x| x * x).sum().sqrt();
    let norm = b.mapv(|x| x * x).sum().sqrt();
    diff / norm
}

pub fn max_asymmetry(a: &Array2<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Euclidean norm of each row.
pub fn row_norms(a: &Array2<f64>) -> Array1<f64> {
    a.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return MeanSe { mean: f64::NAN, se: f64::NAN, count };
        }
        let mean = pairwise_sum(xs) / count as f64;
        if count < 2 {
            return MeanSe { mean, se: f64::NAN, count };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (count - 1) as f64;
        MeanSe { mean, se: (var / count as f64).sqrt(), count }
    }
}
