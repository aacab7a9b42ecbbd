//! Generative model: standard-normal inputs, a fixed random ReLU hidden
//! layer, and a linear read-out with Gaussian noise of known variance.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;

/// Two-layer ReLU network with a fixed first layer `W` (`d × m`) and known
/// noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    weights: Array2<f64>,
    sigma2: f64,
    seed: Option<u64>,
}

impl NetworkModel {
    pub fn new(weights: Array2<f64>, sigma2: f64) -> Result<Self> {
        let (d, m) = weights.dim();
        if d == 0 || m == 0 {
            return Err(Error::invalid(format!("weights must be non-empty, got {d}x{m}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights contain non-finite entries"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(NetworkModel { weights, sigma2, seed: None })
    }

    /// Model with `W` drawn by [`sample_weights`] from `seed`.
    pub fn sample(d: usize, m: usize, sigma2: f64, seed: u64) -> Result<Self> {
        let mut rng = crate::rng::seeded(seed);
        let w = sample_weights(d, m, &mut rng)?;
        Ok(NetworkModel::new(w, sigma2)?.with_seed(seed))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn d(&self) -> usize {
        self.weights.nrows()
    }

    pub fn m(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Dimension of the analytically coded subspace, `d(d+3)/2`.
    pub fn coded_dim(&self) -> usize {
        coded_dim(self.d())
    }

    /// `‖W⁽ⁱ⁾‖` for every hidden unit.
    pub fn column_norms(&self) -> Array1<f64> {
        self.weights.map_axis(Axis(0), |c| c.dot(&c).sqrt())
    }

    /// Hidden-layer features `φ(xW)` for each row of `inputs`.
    pub fn features(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if inputs.ncols() != self.d() {
            return Err(Error::shape(format!("inputs have {} columns, model has d = {}", inputs.ncols(), self.d())));
        }
        let mut f = inputs.dot(&self.weights);
        f.mapv_inplace(relu);
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// `d(d+3)/2`.
pub fn coded_dim(d: usize) -> usize {
    d * (d + 3) / 2
}

#[inline]
fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// On-disk form of a [`NetworkModel`]; `W` is stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub m: usize,
    pub sigma2: f64,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub seed: Option<u64>,
}

impl From<&NetworkModel> for ModelFile {
    fn from(model: &NetworkModel) -> Self {
        ModelFile {
            d: model.d(),
            m: model.m(),
            sigma2: model.sigma2,
            w: model.weights.iter().copied().collect(),
            seed: model.seed,
        }
    }
}

impl TryFrom<ModelFile> for NetworkModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.w.len() != file.d * file.m {
            return Err(Error::Format(format!("W has {} entries, expected d*m = {}", file.w.len(), file.d * file.m)));
        }
        let w = Array2::from_shape_vec((file.d, file.m), file.w).map_err(|e| Error::Format(e.to_string()))?;
        let model = NetworkModel::new(w, file.sigma2)?;
        Ok(match file.seed {
            Some(s) => model.with_seed(s),
            None => model,
        })
    }
}

/// Last-layer weights with `‖v‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParam {
    v: Array1<f64>,
}

impl TrueParam {
    pub fn new(v: Array1<f64>) -> Result<Self> {
        let norm = v.dot(&v).sqrt();
        if !(norm <= 1.0 + 1e-12) {
            return Err(Error::invalid(format!("parameter norm {norm} exceeds 1")));
        }
        Ok(TrueParam { v })
    }

    pub fn zeros(m: usize) -> Self {
        TrueParam { v: Array1::zeros(m) }
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.v.view()
    }

    pub fn norm(&self) -> f64 {
        self.v.dot(&self.v).sqrt()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.v
    }
}

/// `n` samples of input, recomputed features, and response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    features: Array2<f64>,
    responses: Array1<f64>,
}

impl Dataset {
    /// Assembles a dataset, recomputing the features from `model`.
    pub fn from_inputs(model: &NetworkModel, inputs: Array2<f64>, responses: Array1<f64>) -> Result<Self> {
        if inputs.nrows() != responses.len() {
            return Err(Error::shape(format!("{} input rows but {} responses", inputs.nrows(), responses.len())));
        }
        let features = model.features(inputs.view())?;
        Ok(Dataset { inputs, features, responses })
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn responses(&self) -> ArrayView1<'_, f64> {
        self.responses.view()
    }

    /// Writes `t,x_1..x_d,y` rows; features are not stored.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.inputs.ncols();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|l| format!("x_{l}")));
        header.push("y".into());
        w.write_record(&header)?;
        for (t, (x, y)) in self.inputs.outer_iter().zip(self.responses.iter()).enumerate() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`Dataset::write_csv`] and recomputes features.
    pub fn read_csv<R: Read>(model: &NetworkModel, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let d = model.d();
        let header = r.headers()?.clone();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=d).map(|l| format!("x_{l}")))
            .chain(std::iter::once("y".to_string()))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Format(format!(
                "dataset header {:?} does not match d = {d}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}")));
            for l in 0..d {
                xs.push(parse(&rec[l + 1])?);
            }
            ys.push(parse(&rec[d + 1])?);
        }
        let n = ys.len();
        let inputs = Array2::from_shape_vec((n, d), xs).map_err(|e| Error::Format(e.to_string()))?;
        Dataset::from_inputs(model, inputs, Array1::from(ys))
    }
}

/// `d × m` matrix of independent `N(0, 1/m)` entries.
pub fn sample_weights<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Array2<f64>> {
    if d == 0 || m == 0 {
        return Err(Error::invalid(format!("need d, m >= 1, got d = {d}, m = {m}")));
    }
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("finite std dev");
    Ok(Array2::from_shape_simple_fn((d, m), || normal.sample(rng)))
}

/// `Xᵢ = max(0, Σₗ xₗ Wₗᵢ)` for a single input row.
pub fn relu_features(x: ArrayView1<'_, f64>, w: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x.len() != w.nrows() {
        return Err(Error::shape(format!("input has length {}, weights have {} rows", x.len(), w.nrows())));
    }
    Ok(x.dot(&w).mapv(relu))
}

/// Uniform draw from the unit ball in `R^m`.
pub fn sample_true_param<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<TrueParam> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    loop {
        let g: Array1<f64> = Array1::from_shape_simple_fn(m, || StandardNormal.sample(rng));
        let norm = g.dot(&g).sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let radius = u.powf(1.0 / m as f64);
        let v = g * (radius / norm);
        // radius < 1 and rounding can only nudge the norm by an ulp.
        return TrueParam::new(v);
    }
}

/// `n` samples from the model with parameter `vstar`.
pub fn generate_dataset<R: Rng + ?Sized>(
    model: &NetworkModel,
    vstar: &TrueParam,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    generate_dataset_with_noise(model, vstar, n, model.sigma2(), rng)
}

/// As [`generate_dataset`] with an explicit noise variance; `0` gives
/// noiseless responses for test fixtures.
pub fn generate_dataset_with_noise<R: Rng + ?Sized>(
    model: &NetworkModel,
    vstar: &TrueParam,
    n: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    if vstar.view().len() != model.m() {
        return Err(Error::shape(format!("parameter has length {}, model has m = {}", vstar.view().len(), model.m())));
    }
    let d = model.d();
    let inputs: Array2<f64> = Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(rng));
    let features = model.features(inputs.view())?;
    let mut responses = features.dot(&vstar.view());
    let sd = noise_var.sqrt();
    for y in responses.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        *y += sd * e;
    }
    Ok(Dataset { inputs, features, responses })
}

/// `Σₜ (yₜ − Xₜv)²/(2σ²) + (n/2)·log(2πσ²)`.
pub fn neg_log_likelihood(v: ArrayView1<'_, f64>, data: &Dataset, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if v.len() != data.features.ncols() {
        return Err(Error::shape(format!(
            "parameter has length {}, features have {} columns",
            v.len(),
            data.features.ncols()
        )));
    }
    let fitted = data.features.dot(&v);
    let sq: Vec<f64> = data.responses.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).collect();
    Ok(gaussian_nll(pairwise_sum(&sq), data.n(), sigma2))
}

/// Negative log-likelihood from a residual sum of squares.
pub(crate) fn gaussian_nll(rss: f64, n: usize, sigma2: f64) -> f64 {
    rss / (2.0 * sigma2) + 0.5 * n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln()
}
