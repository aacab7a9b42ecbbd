//! Two-stage parameter code: a uniform grid per coded direction.
//!
//! Direction `i` with eigenvalue `λᵢ` gets width `Δᵢ = 2√(ασ²/(nλᵢ))` and
//! `qᵢ = ⌈2r/Δᵢ⌉` points `{−Δᵢq′ᵢ/2 + Δᵢk : k = 0…q′ᵢ}`, each coded with
//! `Lᵢ = log qᵢ` nats. Directions beyond the coded ones sit at the single
//! point 0 and cost nothing.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ApproxBasis, GramReport, Spectrum};

/// Grid and code length of one coded direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub lambda: f64,
    pub delta: f64,
    pub q: u64,
    pub q_prime: u64,
    /// `log qᵢ` in nats.
    pub length: f64,
    /// `cᵢ = r·√(λᵢ/(ασ²))`.
    pub c: f64,
}

impl Direction {
    /// Grid point `k`.
    pub fn point(&self, k: u64) -> f64 {
        (k as f64 - self.q_prime as f64 / 2.0) * self.delta
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.q).map(|k| self.point(k)).collect()
    }

    /// Index of the grid point nearest `x`; ties go to the smaller value
    /// and points past either end clamp to it.
    pub fn nearest_index(&self, x: f64) -> u64 {
        let pos = x / self.delta + self.q_prime as f64 / 2.0;
        let k = (pos - 0.5).ceil();
        if k <= 0.0 {
            0
        } else if k >= self.q_prime as f64 {
            self.q_prime
        } else {
            k as u64
        }
    }
}

/// Complete two-stage code over the coded directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub alpha: f64,
    pub sigma2: f64,
    pub n: usize,
    /// Half-range `r` of the quantized coordinates.
    pub radius: f64,
    pub directions: Vec<Direction>,
}

/// Nearest grid point for every coordinate of a `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub indices: Vec<u64>,
    pub values: Vec<f64>,
    /// Some coordinate had `|θᵢ| > r` and was pulled to a grid end.
    pub clamped: bool,
}

/// One direction's check of `Lᵢ ≤ ½log n + log cᵢ + 1/(cᵢ√n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBound {
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    /// `cᵢ√n ≥ 1`, the regime in which the bound is guaranteed.
    pub applicable: bool,
}

impl CodeSpec {
    /// Number of coded directions `D`.
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.directions.iter().map(|d| d.lambda).collect()
    }

    /// `L(θ) = Σ log qᵢ`, the same for every grid point.
    pub fn total_length(&self) -> f64 {
        self.directions.iter().map(|d| d.length).sum()
    }

    /// `Π qᵢ` as a float (it can exceed `u64`).
    pub fn grid_size(&self) -> f64 {
        self.directions.iter().map(|d| d.q as f64).product()
    }

    pub fn point(&self, indices: &[u64]) -> Result<Vec<f64>> {
        self.check_indices(indices)?;
        Ok(self.directions.iter().zip(indices).map(|(d, &k)| d.point(k)).collect())
    }

    fn check_indices(&self, indices: &[u64]) -> Result<()> {
        if indices.len() != self.dim() {
            return Err(Error::shape(format!("{} indices for {} coded directions", indices.len(), self.dim())));
        }
        for (i, (d, &k)) in self.directions.iter().zip(indices).enumerate() {
            if k >= d.q {
                return Err(Error::invalid(format!("index {k} out of range for direction {i} with {} points", d.q)));
            }
        }
        Ok(())
    }

    pub fn to_export(&self) -> CodeSpecExport {
        CodeSpecExport {
            alpha: self.alpha,
            sigma2: self.sigma2,
            n: self.n,
            coded_dim: self.dim(),
            radius: self.radius,
            directions: self
                .directions
                .iter()
                .map(|d| DirectionExport { lambda: d.lambda, delta: d.delta, q: d.q, length_nats: d.length })
                .collect(),
        }
    }
}

/// JSON form `{alpha, sigma2, n, D, radius, directions: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpecExport {
    pub alpha: f64,
    pub sigma2: f64,
    pub n: usize,
    #[serde(rename = "D")]
    pub coded_dim: usize,
    pub radius: f64,
    pub directions: Vec<DirectionExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionExport {
    pub lambda: f64,
    pub delta: f64,
    pub q: u64,
    pub length_nats: f64,
}

/// Builds the code for eigenvalues `λ₁…λ_D`.
///
/// Directions with `λᵢ ≤ 0` are rejected; the caller decides which to drop.
pub fn build_code(eigenvalues: &[f64], alpha: f64, sigma2: f64, n: usize, radius: f64) -> Result<CodeSpec> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be > 1, got {alpha}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(radius >= 1.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be >= 1, got {radius}")));
    }
    let nf = n as f64;
    let directions = eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::invalid(format!(
                    "eigenvalue {i} is {lambda}; non-positive directions must be dropped before coding"
                )));
            }
            let delta = 2.0 * (alpha * sigma2 / (nf * lambda)).sqrt();
            let q = (2.0 * radius / delta).ceil().max(1.0) as u64;
            Ok(Direction {
                lambda,
                delta,
                q,
                q_prime: q - 1,
                length: (q as f64).ln(),
                c: radius * (lambda / (alpha * sigma2)).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CodeSpec { alpha, sigma2, n, radius, directions })
}

/// `L(θ)` at the given grid indices.
pub fn code_length(spec: &CodeSpec, indices: &[u64]) -> Result<f64> {
    spec.check_indices(indices)?;
    Ok(spec.total_length())
}

/// `Σ_θ exp(−L(θ))` over the product grid, as `Π qᵢ·exp(−log qᵢ)`.
pub fn kraft_sum(spec: &CodeSpec) -> f64 {
    spec.directions.iter().map(|d| d.q as f64 * (-d.length).exp()).product()
}

pub fn length_bound_check(spec: &CodeSpec) -> Vec<LengthBound> {
    let sqrt_n = (spec.n as f64).sqrt();
    spec.directions
        .iter()
        .map(|d| {
            let cn = d.c * sqrt_n;
            let bound = 0.5 * (spec.n as f64).ln() + d.c.ln() + 1.0 / cn;
            let slack = bound - d.length;
            LengthBound { bound, slack, holds: slack >= 0.0, applicable: cn >= 1.0 }
        })
        .collect()
}

/// Nearest grid point per coordinate (ties toward the smaller value).
pub fn quantize_point(spec: &CodeSpec, theta: &[f64]) -> Result<Quantized> {
    if theta.len() != spec.dim() {
        return Err(Error::shape(format!("theta has {} coordinates, code has {}", theta.len(), spec.dim())));
    }
    let mut clamped = false;
    let mut indices = Vec::with_capacity(theta.len());
    let mut values = Vec::with_capacity(theta.len());
    for (d, &x) in spec.directions.iter().zip(theta) {
        clamped |= x.abs() > spec.radius;
        let k = d.nearest_index(x);
        indices.push(k);
        values.push(d.point(k));
    }
    Ok(Quantized { indices, values, clamped })
}

/// Where the coded directions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Leading eigenvectors of a Fisher-information estimate.
    Exact,
    /// The analytic approximate eigenbasis.
    Approx,
}

/// The directions `u⁽¹⁾…u⁽ᴰ⁾` a code is built on, with their eigenvalues
/// and the coordinate radius.
#[derive(Debug, Clone)]
pub struct CodedBasis {
    pub kind: BasisKind,
    /// `D × m`; parameters are `v = Σ θᵢ u⁽ⁱ⁾`.
    pub rows: Array2<f64>,
    pub lambdas: Vec<f64>,
    pub radius: f64,
    /// Distance of the rows from orthonormal; 0 for eigenvectors.
    pub eps1: f64,
}

impl CodedBasis {
    /// Top `dim` eigenpairs. Only positive eigenvalues can be coded.
    pub fn from_spectrum(spectrum: &Spectrum, dim: usize) -> Result<Self> {
        if dim == 0 || dim > spectrum.len() {
            return Err(Error::invalid(format!(
                "cannot code {dim} directions from a spectrum of length {}",
                spectrum.len()
            )));
        }
        let lambdas: Vec<f64> = spectrum.eigenvalues.iter().take(dim).copied().collect();
        if let Some(i) = lambdas.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::Degenerate(format!("eigenvalue {} is {}; choose a smaller D", i + 1, lambdas[i])));
        }
        Ok(CodedBasis {
            kind: BasisKind::Exact,
            rows: spectrum.eigenvectors.slice(s![..dim, ..]).to_owned(),
            lambdas,
            radius: 1.0,
            eps1: 0.0,
        })
    }

    /// The approximate basis with its grouped eigenvalues and radius
    /// `√(1 + ε₁)`.
    pub fn from_approx(basis: &ApproxBasis, gram: &GramReport) -> Self {
        CodedBasis {
            kind: BasisKind::Approx,
            rows: basis.rows.clone(),
            lambdas: basis.approx_eigenvalues.to_vec(),
            radius: gram.radius(),
            eps1: gram.eps1,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn m(&self) -> usize {
        self.rows.ncols()
    }

    pub fn code(&self, alpha: f64, sigma2: f64, n: usize) -> Result<CodeSpec> {
        build_code(&self.lambdas, alpha, sigma2, n, self.radius)
    }
}
