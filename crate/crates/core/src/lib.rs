//! Minimum-description-length estimation for the last layer of a
//! two-layer ReLU network with a fixed random first layer.
//!
//! The crate covers the whole pipeline:
//!
//! * [`model`]: the generative model, synthetic data, and likelihoods.
//! * [`spectral`]: Fisher-information estimates, exact and leading spectra,
//!   the analytic approximate eigenbasis, its Gram report, and the residual
//!   series.
//! * [`twostage`]: per-direction quantization grids and code lengths.
//! * [`estimator`]: the penalized grid search over the quantized parameters.
//! * [`risk`]: Rényi and KL risk, empirical redundancy, and the closed-form
//!   bound right-hand sides.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

// Links the OpenBLAS symbols used by ndarray and the BLAS calls in `linalg`.
extern crate blas_src;

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod risk;
pub mod rng;
pub mod spectral;
pub mod twostage;

pub use error::{Error, Result};
pub use estimator::{mdl_estimate, MdlEstimate, Method};
pub use linalg::MeanSe;
pub use model::{Dataset, NetworkModel, TrueParam};
pub use risk::{BoundBreakdown, RenyiConfig};
pub use twostage::{build_code, BasisKind, CodeSpec, CodedBasis};
