//! Dense feedforward networks: forward pass, backpropagation, seeded SGD
//! training and the `KICKCAST-DNN v1` text weight format.

mod backprop;
mod format;
mod train;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use backprop::{gradients, Gradients, LayerGradients, Loss, Target};
pub use format::{from_text, load_text, save_text, to_text, MODEL_MAGIC, MODEL_VERSION};
pub use train::{init_network, train, TrainConfig, TrainReport, TrainTargets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }

    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Linear => {}
            Activation::Softmax => softmax_in_place(z),
        }
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim × in_dim`; row `i` feeds output unit `i`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }

    /// Pre-activation `W x + b` written into `out`.
    pub(crate) fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, z) in out.iter_mut().enumerate() {
            *z = self.biases[o] + dot(self.row(o), x);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.affine(x, &mut out);
        self.activation.apply(&mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "width")]
pub enum Task {
    Classification(usize),
    Regression(usize),
}

impl Task {
    pub fn width(self) -> usize {
        match self {
            Task::Classification(n) | Task::Regression(n) => n,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classification(n) => write!(f, "classification {n}"),
            Task::Regression(n) => write!(f, "regression {n}"),
        }
    }
}

/// Per-column input scaling stored with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Columns whose spread is below this are passed through unscaled.
pub const MIN_STD: f64 = 1e-12;

impl Standardizer {
    /// Population mean and standard deviation of each column.
    pub fn fit(rows: &[&[f64]]) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for r in rows {
            axpy(&mut means, 1.0, r);
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(*r).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    pub layers: Vec<DenseLayer>,
    pub task: Task,
    pub standardizer: Option<Standardizer>,
}

/// Output of [`predict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    /// Class probabilities or regression outputs.
    pub outputs: Vec<f64>,
    /// Argmax for classification, lowest index on ties.
    pub class: Option<usize>,
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl DenseNetwork {
    /// Checks layer chaining, activation placement and parameter finiteness.
    pub fn new(layers: Vec<DenseLayer>, task: Task, standardizer: Option<Standardizer>) -> Result<Self> {
        let net = Self { layers, task, standardizer };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let Some(last) = self.layers.last() else {
            return bad("network has no layers".into());
        };
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return bad(format!("layer {i} has a zero dimension"));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim {
                return bad(format!("layer {i} parameter count does not match {}x{}", l.out_dim, l.in_dim));
            }
            if i > 0 && self.layers[i - 1].out_dim != l.in_dim {
                return bad(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    l.in_dim,
                    i - 1,
                    self.layers[i - 1].out_dim
                ));
            }
            if l.activation == Activation::Softmax && i + 1 != self.layers.len() {
                return bad(format!("softmax on hidden layer {i}"));
            }
            if !l.weights.iter().chain(&l.biases).all(|v| v.is_finite()) {
                return bad(format!("layer {i} has non-finite parameters"));
            }
        }
        if last.out_dim != self.task.width() {
            return bad(format!("task {} but final layer has {} outputs", self.task, last.out_dim));
        }
        match (self.task, last.activation) {
            (Task::Classification(_), Activation::Softmax) => {}
            (Task::Classification(_), a) => return bad(format!("classification output must be softmax, not {}", a.name())),
            (Task::Regression(_), Activation::Softmax) => return bad("regression output cannot be softmax".into()),
            _ => {}
        }
        if let Some(s) = &self.standardizer {
            if s.means.len() != self.input_width() || s.stds.len() != self.input_width() {
                return bad(format!(
                    "standardizer width {} does not match input width {}",
                    s.means.len(),
                    self.input_width()
                ));
            }
            if !s.means.iter().chain(&s.stds).all(|v| v.is_finite()) || s.stds.iter().any(|v| *v <= 0.0) {
                return bad("standardizer must be finite with positive spreads".into());
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Layer widths joined by dashes, e.g. `794-128-128-3`.
    pub fn architecture(&self) -> String {
        let mut dims = vec![self.input_width().to_string()];
        dims.extend(self.layers.iter().map(|l| l.out_dim.to_string()));
        dims.join("-")
    }

    fn check_width(&self, found: usize) -> Result<()> {
        if found != self.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.input_width(),
                found,
            });
        }
        Ok(())
    }

    /// Raw network output; stored standardization is not applied.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_width(input.len())?;
        let mut x = input.to_vec();
        for l in &self.layers {
            x = l.forward(&x);
        }
        Ok(x)
    }

    pub fn standardize(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_width(input.len())?;
        Ok(match &self.standardizer {
            Some(s) => s.apply(input),
            None => input.to_vec(),
        })
    }

    /// Applies the stored standardization, then the network.
    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        let outputs = self.forward(&self.standardize(features)?)?;
        let class = matches!(self.task, Task::Classification(_)).then(|| argmax(&outputs));
        Ok(Prediction { outputs, class })
    }

    /// [`DenseNetwork::predict`] over many rows, in parallel.
    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Result<Vec<Prediction>> {
        rows.par_iter().map(|r| self.predict(r.as_ref())).collect()
    }
}

/// Free-function form of [`DenseNetwork::forward`].
pub fn forward(net: &DenseNetwork, input: &[f64]) -> Result<Vec<f64>> {
    net.forward(input)
}

/// Free-function form of [`DenseNetwork::predict`].
pub fn predict(net: &DenseNetwork, features: &[f64]) -> Result<Prediction> {
    net.predict(features)
}
