//! Fisher-information structure of the random-feature ReLU model.
//!
//! For Gaussian noise the Fisher information is `J/σ²` with
//! `J = E[XᵀX]`, so everything here works with `J` and leaves the `σ²`
//! scaling to the caller.

mod basis;
mod eigen;
mod export;
mod fim;
mod gram;
mod residual;

pub use basis::{approx_basis, ApproxBasis, BasisGroup, GS_DROP_TOL};
pub use eigen::{beta_d, exact_spectrum, leading_spectrum, Spectrum};
pub use export::{read_fimj, write_fimj, SpectrumExport, FIMJ_MAGIC, FIMJ_VERSION};
pub use fim::{empirical_fim, monte_carlo_fim, monte_carlo_trace, FimMatrix, FimSource, DEFAULT_MC_SAMPLES};
pub use gram::{analytic_fim_reconstruction, gram_report, GramReport, MAX_GRAM_CONDITION};
pub use residual::{residual_matrix, residual_series, ResidualSeries, R_SERIES_MAX_TERMS, R_SERIES_REL_TOL};
