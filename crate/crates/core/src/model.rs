//! L-layer feedforward binary classifier.
//!
//! Hidden layers are `LINEAR -> ReLU`, the output layer is `LINEAR -> sigmoid`
//! with a single unit. Parameters are always stored at the size of the
//! maximum architecture; a smaller architecture reads the top-left block of
//! every weight matrix and the leading entries of every bias vector.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;

/// Clamp applied to sigmoid outputs before taking logs in [`cost`].
pub const LOG_EPS: f64 = 1e-12;

/// Below this many multiply-adds a layer is computed on the calling thread.
const PAR_LAYER_WORK: usize = 1 << 16;

/// Neuron counts per layer, input first, single output last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture(Vec<usize>);

impl Architecture {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config(format!(
                "architecture needs at least input and output layers, got {dims:?}"
            )));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::config(format!(
                "layer {i} of {dims:?} has size 0; every layer needs at least one neuron"
            )));
        }
        if dims[dims.len() - 1] != 1 {
            return Err(Error::config(format!(
                "output layer of {dims:?} must have exactly one unit"
            )));
        }
        Ok(Self(dims))
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of weight layers (`L`).
    #[inline]
    pub fn layers(&self) -> usize {
        self.0.len() - 1
    }

    #[inline]
    pub fn input(&self) -> usize {
        self.0[0]
    }

    /// Hidden layer widths, excluding input and output.
    #[inline]
    pub fn hidden(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    /// True when both have the same depth and every width here is within `max`.
    pub fn fits_within(&self, max: &Architecture) -> bool {
        self.0.len() == max.0.len() && self.0.iter().zip(&max.0).all(|(a, b)| a <= b)
    }
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Architecture::new(dims)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(a: Architecture) -> Self {
        a.0
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Weights and biases of every layer. `weights[l]` has shape
/// `(dims[l+1], dims[l])` and `biases[l]` has `dims[l+1]` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamSet {
    /// Layer widths implied by the stored shapes.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.weights.len() + 1);
        if let Some(w) = self.weights.first() {
            dims.push(w.cols());
        }
        dims.extend(self.weights.iter().map(Matrix::rows));
        dims
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    pub fn same_shape(&self, other: &ParamSet) -> bool {
        self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.shape() == b.shape())
            && self
                .biases
                .iter()
                .zip(&other.biases)
                .all(|(a, b)| a.len() == b.len())
    }

    pub(crate) fn check_same_shape(&self, other: &ParamSet) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "parameter sets differ in shape: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )))
        }
    }

    /// Errors unless `arch` can be read out of these parameters.
    pub(crate) fn check_holds(&self, arch: &Architecture) -> Result<()> {
        let dims = self.dims();
        let ok = dims.len() == arch.dims().len()
            && dims.iter().zip(arch.dims()).all(|(have, want)| want <= have);
        if ok {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "architecture {arch} does not fit parameters sized {dims:?}"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// Every weight then every bias, layer by layer.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.as_mut_slice().iter_mut().chain(b.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.as_slice().len() + b.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An architecture together with its evaluated cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSolution {
    pub arch: Architecture,
    pub cost: f64,
}

impl ArchSolution {
    pub fn new(arch: Architecture, cost: f64) -> Self {
        Self { arch, cost }
    }
}

impl fmt::Display for ArchSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims = self.arch.dims();
        write!(f, "[")?;
        for d in dims {
            write!(f, "{d}, ")?;
        }
        write!(f, "{:.5}]", self.cost)
    }
}

/// Features (one column per example) and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<u8>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::InvalidData("dataset has no features".into()));
        }
        if x.cols() == 0 {
            return Err(Error::InvalidData("dataset has no examples".into()));
        }
        if x.cols() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} example columns but {} labels",
                x.cols(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidData(format!(
                "label {} at example {i} is not 0 or 1",
                y[i]
            )));
        }
        if let Some(i) = x
            .as_slice()
            .iter()
            .position(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidData(format!(
                "feature value {} at flat index {i} lies outside [0, 1]; normalize the data first",
                x.as_slice()[i]
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn features(&self) -> usize {
        self.x.rows()
    }

    /// Example count.
    pub fn m(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// Sigmoid output per example.
    pub output: Vec<f64>,
}

/// Per-layer pre-activations `Z[l]` and activations `A[l]` (with `A[0] = X`
/// omitted), as needed by backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    pub accuracy: f64,
}

pub fn init_zero_params(max_dims: &Architecture) -> ParamSet {
    let d = max_dims.dims();
    ParamSet {
        weights: d.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect(),
        biases: d.windows(2).map(|w| vec![0.0; w[1]]).collect(),
    }
}

/// Copies the block of `full` that `arch` reads.
pub fn trim_params(full: &ParamSet, arch: &Architecture) -> Result<ParamSet> {
    full.check_holds(arch)?;
    let d = arch.dims();
    let weights = full
        .weights
        .iter()
        .enumerate()
        .map(|(l, w)| w.top_left(d[l + 1], d[l]))
        .collect::<Result<_>>()?;
    let biases = full
        .biases
        .iter()
        .enumerate()
        .map(|(l, b)| b[..d[l + 1]].to_vec())
        .collect();
    Ok(ParamSet { weights, biases })
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `Z = W[..n_out, ..n_in] * A + b[..n_out]`, reading the top-left block of
/// a possibly larger weight matrix.
fn affine(w: &Matrix, b: &[f64], a: &Matrix, n_out: usize) -> Matrix {
    let n_in = a.rows();
    let m = a.cols();
    let mut z = Matrix::zeros(n_out, m);
    let fill = |r: usize, z_row: &mut [f64]| {
        z_row.fill(b[r]);
        let w_row = &w.row(r)[..n_in];
        for (k, &wk) in w_row.iter().enumerate() {
            for (zj, &aj) in z_row.iter_mut().zip(a.row(k)) {
                *zj += wk * aj;
            }
        }
    };
    if n_out * n_in * m >= PAR_LAYER_WORK {
        exec::for_each_row(z.as_mut_slice(), m, fill);
    } else {
        exec::sequential::for_each_row(z.as_mut_slice(), m, fill);
    }
    z
}

fn propagate(
    params: &ParamSet,
    arch: &Architecture,
    x: &Matrix,
    keep: bool,
) -> Result<(Matrix, Option<Trace>)> {
    params.check_holds(arch)?;
    if x.rows() != arch.input() {
        return Err(Error::dim(format!(
            "input has {} features but architecture {arch} expects {}",
            x.rows(),
            arch.input()
        )));
    }
    let d = arch.dims();
    let last = arch.layers() - 1;
    let mut trace = keep.then(|| Trace {
        pre: Vec::with_capacity(arch.layers()),
        post: Vec::with_capacity(arch.layers()),
    });
    let mut a: Option<Matrix> = None;
    for l in 0..arch.layers() {
        let input = a.as_ref().unwrap_or(x);
        let z = affine(&params.weights[l], &params.biases[l], input, d[l + 1]);
        let mut next = z.clone();
        if l == last {
            next.as_mut_slice().iter_mut().for_each(|v| *v = logistic(*v));
        } else {
            next.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        if let Some(t) = trace.as_mut() {
            t.pre.push(z);
            t.post.push(next.clone());
        }
        a = Some(next);
    }
    Ok((a.expect("architecture has at least one layer"), trace))
}

/// Forward pass over all examples (columns of `x`).
pub fn forward(params: &ParamSet, arch: &Architecture, x: &Matrix) -> Result<ForwardResult> {
    let (out, _) = propagate(params, arch, x, false)?;
    Ok(ForwardResult {
        output: out.as_slice().to_vec(),
    })
}

/// Forward pass that keeps every intermediate layer.
pub fn forward_trace(params: &ParamSet, arch: &Architecture, x: &Matrix) -> Result<Trace> {
    let (_, trace) = propagate(params, arch, x, true)?;
    Ok(trace.expect("trace requested"))
}

/// Mean binary cross-entropy with outputs clamped to `[LOG_EPS, 1 - LOG_EPS]`.
pub fn cost(output: &[f64], labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if output.len() != labels.len() {
        return Err(Error::dim(format!(
            "{} outputs for {} labels",
            output.len(),
            labels.len()
        )));
    }
    let total: f64 = output
        .iter()
        .zip(labels)
        .map(|(&a, &y)| {
            let a = a.clamp(LOG_EPS, 1.0 - LOG_EPS);
            if y == 1 {
                a.ln()
            } else {
                (1.0 - a).ln()
            }
        })
        .sum();
    Ok(-total / labels.len() as f64)
}

/// Cost of `arch` read out of `params` on `data`.
pub fn evaluate(params: &ParamSet, arch: &Architecture, data: &Dataset) -> Result<f64> {
    let out = forward(params, arch, data.x())?;
    cost(&out.output, data.y())
}

/// Thresholds outputs at 0.5 (inclusive) and scores against `labels`.
pub fn classify(output: &[f64], labels: &[u8]) -> Result<Prediction> {
    if output.len() != labels.len() {
        return Err(Error::dim(format!(
            "{} outputs for {} labels",
            output.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted: Vec<u8> = output.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(Prediction {
        accuracy: hits as f64 / labels.len() as f64,
        labels: predicted,
    })
}

pub fn predict(
    params: &ParamSet,
    arch: &Architecture,
    x: &Matrix,
    labels: &[u8],
) -> Result<Prediction> {
    let out = forward(params, arch, x)?;
    classify(&out.output, labels)
}
