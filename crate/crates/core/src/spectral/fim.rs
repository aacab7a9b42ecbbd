use ndarray::{s, Array2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fill_lower_from_upper, max_asymmetry, pairwise_sum, sym_eigvals, syrk_upper_accumulate};
use crate::model::{Dataset, NetworkModel};
use crate::rng::substream;

/// Default number of input draws for [`monte_carlo_fim`].
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Input draws per Monte Carlo partition. Fixed, so the partition (and the
/// result) does not depend on the number of worker threads.
const MC_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FimSource {
    Empirical,
    MonteCarlo,
    AnalyticReconstruction,
}

/// Symmetric `m × m` estimate of `J = E[XᵀX]`.
#[derive(Debug, Clone)]
pub struct FimMatrix {
    j: Array2<f64>,
    source: FimSource,
    sample_count: usize,
}

impl FimMatrix {
    pub fn new(j: Array2<f64>, source: FimSource, sample_count: usize) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::shape(format!("FIM must be square, got {:?}", j.dim())));
        }
        if j.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("FIM has non-finite entries"));
        }
        let scale = j.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if max_asymmetry(&j) > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("FIM is not symmetric"));
        }
        Ok(FimMatrix { j, source, sample_count })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.j
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.j
    }

    pub fn m(&self) -> usize {
        self.j.nrows()
    }

    pub fn source(&self) -> FimSource {
        self.source
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn trace(&self) -> f64 {
        self.j.diag().sum()
    }

    /// Smallest eigenvalue; full decomposition, so intended for moderate `m`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(sym_eigvals(&self.j)?[0])
    }

    /// `wJwᵀ` for a length-`m` vector.
    pub fn quadratic_form(&self, w: ndarray::ArrayView1<'_, f64>) -> Result<f64> {
        if w.len() != self.m() {
            return Err(Error::shape(format!("vector has length {}, FIM is {}", w.len(), self.m())));
        }
        Ok(w.dot(&self.j.dot(&w)))
    }
}

/// `Ĵ = (1/n) Σₜ X⁽ᵗ⁾ᵀX⁽ᵗ⁾` over the dataset's features.
pub fn empirical_fim(data: &Dataset) -> Result<FimMatrix> {
    let f = data.features();
    let (n, m) = f.dim();
    if n == 0 {
        return Err(Error::invalid("empty dataset"));
    }
    let mut acc = Array2::zeros((m, m));
    let owned = f.as_standard_layout();
    syrk_upper_accumulate(&mut acc, owned.view())?;
    fill_lower_from_upper(&mut acc);
    acc /= n as f64;
    FimMatrix::new(acc, FimSource::Empirical, n)
}

fn chunk_features(model: &NetworkModel, seed: u64, chunk: usize, rows: usize) -> Result<Array2<f64>> {
    let mut rng = substream(seed, chunk as u64);
    let x: Array2<f64> = Array2::from_shape_simple_fn((rows, model.d()), || StandardNormal.sample(&mut rng));
    model.features(x.view())
}

fn chunk_plan(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(MC_CHUNK)).map(|c| (c, MC_CHUNK.min(samples - c * MC_CHUNK))).collect()
}

/// Average of `samples` outer products `XᵀX` with fresh standard-normal
/// inputs.
///
/// Draws are split into fixed-size chunks, chunk `c` using stream `c` of
/// `seed`; chunks are generated in parallel and accumulated in index order.
pub fn monte_carlo_fim(model: &NetworkModel, samples: usize, seed: u64) -> Result<FimMatrix> {
    if samples == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    let m = model.m();
    let mut acc = Array2::<f64>::zeros((m, m));
    let plan = chunk_plan(samples);
    let window = rayon::current_num_threads().max(1);
    for batch in plan.chunks(window) {
        let blocks: Vec<Array2<f64>> =
            batch.par_iter().map(|&(c, rows)| chunk_features(model, seed, c, rows)).collect::<Result<_>>()?;
        for block in &blocks {
            syrk_upper_accumulate(&mut acc, block.view())?;
        }
    }
    fill_lower_from_upper(&mut acc);
    acc /= samples as f64;
    FimMatrix::new(acc, FimSource::MonteCarlo, samples)
}

/// Trace of [`monte_carlo_fim`] for the same draws, without forming `J`.
pub fn monte_carlo_trace(model: &NetworkModel, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    let partials: Vec<f64> = chunk_plan(samples)
        .par_iter()
        .map(|&(c, rows)| {
            let f = chunk_features(model, seed, c, rows)?;
            let rows: Vec<f64> = (0..f.nrows())
                .map(|t| {
                    let r = f.slice(s![t, ..]);
                    r.dot(&r)
                })
                .collect();
            Ok(pairwise_sum(&rows))
        })
        .collect::<Result<_>>()?;
    Ok(partials.iter().sum::<f64>() / samples as f64)
}
