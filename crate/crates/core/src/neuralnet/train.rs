use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backprop::{gradients, sample_loss, Loss, Target};
use super::{Activation, DenseLayer, DenseNetwork, Standardizer, Task, MIN_STD};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub standardize_features: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![128, 128],
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            standardize_features: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Training targets, one per input row.
#[derive(Debug, Clone, Copy)]
pub enum TrainTargets<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values { rows: &'a [Vec<f64>], width: usize },
}

impl TrainTargets<'_> {
    fn len(&self) -> usize {
        match self {
            TrainTargets::Classes { labels, .. } => labels.len(),
            TrainTargets::Values { rows, .. } => rows.len(),
        }
    }

    fn task(&self) -> Task {
        match *self {
            TrainTargets::Classes { n_classes, .. } => Task::Classification(n_classes),
            TrainTargets::Values { width, .. } => Task::Regression(width),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub task: Task,
    pub architecture: String,
    pub rows: usize,
    pub batches_per_epoch: usize,
    /// Mean training loss before the first update.
    pub initial_loss: f64,
    /// Mean training loss over the full training set after each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    pub config: TrainConfig,
}

/// He-initialized network for the given input width and task, drawn from the
/// same stream [`train`] uses.
pub fn init_network(input_width: usize, task: Task, cfg: &TrainConfig) -> Result<DenseNetwork> {
    cfg.validate()?;
    if input_width == 0 {
        return Err(Error::InvalidConfig("input width must be positive".into()));
    }
    let mut rng = seed::derived_rng(cfg.seed, &[0]);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut dims = vec![input_width];
    dims.extend(&cfg.hidden_sizes);
    dims.push(task.width());
    let head = match task {
        Task::Classification(_) => Activation::Softmax,
        Task::Regression(_) => Activation::Linear,
    };
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (i, w) in dims.windows(2).enumerate() {
        let act = if i + 2 == dims.len() { head } else { Activation::Relu };
        let mut layer = DenseLayer::zeros(w[0], w[1], act);
        let sigma = (2.0 / w[0] as f64).sqrt();
        layer.weights.iter_mut().for_each(|v| *v = sigma * normal.sample(&mut rng));
        layers.push(layer);
    }
    DenseNetwork::new(layers, task, None)
}

/// Per-output affine map from training space back to target units.
struct TargetScale {
    means: Vec<f64>,
    stds: Vec<f64>,
}

fn validate_inputs(inputs: &[Vec<f64>], targets: &TrainTargets<'_>) -> Result<usize> {
    let Some(first) = inputs.first() else {
        return Err(Error::Empty("training rows"));
    };
    let width = first.len();
    if width == 0 {
        return Err(Error::InvalidConfig("training rows have no columns".into()));
    }
    if let Some(r) = inputs.iter().find(|r| r.len() != width) {
        return Err(Error::WidthMismatch { expected: width, found: r.len() });
    }
    if inputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("training inputs must be finite".into()));
    }
    if targets.len() != inputs.len() {
        return Err(Error::WidthMismatch { expected: inputs.len(), found: targets.len() });
    }
    match *targets {
        TrainTargets::Classes { labels, n_classes } => {
            if let Some(c) = labels.iter().find(|c| **c >= n_classes) {
                return Err(Error::InvalidConfig(format!("class {c} out of range for {n_classes} classes")));
            }
            let mut seen = vec![false; n_classes];
            labels.iter().for_each(|c| seen[*c] = true);
            if seen.iter().filter(|s| **s).count() < 2 {
                return Err(Error::InvalidConfig("classification needs at least two classes present".into()));
            }
        }
        TrainTargets::Values { rows, width } => {
            if width == 0 {
                return Err(Error::InvalidConfig("regression needs at least one output".into()));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != width) {
                return Err(Error::WidthMismatch { expected: width, found: r.len() });
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("regression targets must be finite".into()));
            }
        }
    }
    Ok(width)
}

/// Mean loss over all rows, in target units.
fn dataset_loss(
    net: &DenseNetwork,
    xs: &[Vec<f64>],
    targets: &[Target<'_>],
    loss: Loss,
    scale: Option<&TargetScale>,
) -> f64 {
    let losses: Vec<f64> = xs
        .par_iter()
        .zip(targets.par_iter())
        .map(|(x, t)| {
            let mut a = x.clone();
            let mut z = Vec::new();
            for l in &net.layers {
                z = vec![0.0; l.out_dim];
                l.affine(&a, &mut z);
                a = z.clone();
                l.activation.apply(&mut a);
            }
            let per = sample_loss(loss, &z, &a, t);
            match scale {
                // ½ Σ (s·Δ)² in target units.
                Some(s) => {
                    let Target::Values(tv) = t else { return per };
                    0.5 * a
                        .iter()
                        .zip(tv.iter())
                        .zip(&s.stds)
                        .map(|((y, t), sd)| (sd * (y - t)) * (sd * (y - t)))
                        .sum::<f64>()
                }
                None => per,
            }
        })
        .collect();
    losses.iter().sum::<f64>() / xs.len() as f64
}

/// Mini-batch SGD with momentum on a freshly initialized network.
///
/// Inputs are standardized with statistics of these rows, which are stored
/// in the returned model. Regression targets are standardized during
/// training and the scaling is folded into the output layer afterwards, so
/// the model predicts in target units.
pub fn train(inputs: &[Vec<f64>], targets: TrainTargets<'_>, cfg: &TrainConfig) -> Result<(DenseNetwork, TrainReport)> {
    cfg.validate()?;
    let width = validate_inputs(inputs, &targets)?;
    let task = targets.task();
    let mut net = init_network(width, task, cfg)?;

    let standardizer = cfg.standardize_features.then(|| {
        let refs: Vec<&[f64]> = inputs.iter().map(|r| r.as_slice()).collect();
        Standardizer::fit(&refs)
    });
    let xs: Vec<Vec<f64>> = match &standardizer {
        Some(s) => inputs.par_iter().map(|r| s.apply(r)).collect(),
        None => inputs.to_vec(),
    };

    let (loss, scale, scaled_rows) = match targets {
        TrainTargets::Classes { .. } => (Loss::CrossEntropy, None, Vec::new()),
        TrainTargets::Values { rows, width } => {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let fit = Standardizer::fit(&refs);
            let scale = TargetScale {
                stds: fit.stds.iter().map(|s| if *s < MIN_STD { 1.0 } else { *s }).collect(),
                means: fit.means,
            };
            debug_assert_eq!(scale.means.len(), width);
            let scaled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().zip(&scale.means).zip(&scale.stds).map(|((v, m), s)| (v - m) / s).collect())
                .collect();
            (Loss::SquaredError, Some(scale), scaled)
        }
    };
    let all_targets: Vec<Target<'_>> = match targets {
        TrainTargets::Classes { labels, .. } => labels.iter().map(|c| Target::Class(*c)).collect(),
        TrainTargets::Values { .. } => scaled_rows.iter().map(|r| Target::Values(r)).collect(),
    };

    let n = xs.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let initial_loss = dataset_loss(&net, &xs, &all_targets, loss, scale.as_ref());
    let mut velocity: Vec<(Vec<f64>, Vec<f64>)> = net
        .layers
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = seed::derived_rng(cfg.seed, &[1]);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch_x: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);
    let mut batch_t: Vec<Target<'_>> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch_x.clear();
            batch_t.clear();
            batch_x.extend(chunk.iter().map(|&i| xs[i].as_slice()));
            batch_t.extend(chunk.iter().map(|&i| all_targets[i]));
            let (_, grads) = gradients(&net, &batch_x, &batch_t, loss).map_err(|e| match e {
                Error::NonFiniteLoss { sample, .. } => Error::NonFiniteLoss {
                    sample: chunk[sample],
                    epoch: Some(epoch),
                    batch: Some(bi),
                },
                other => other,
            })?;
            for ((layer, g), (vw, vb)) in net.layers.iter_mut().zip(&grads.layers).zip(&mut velocity) {
                for ((w, v), g) in layer.weights.iter_mut().zip(vw.iter_mut()).zip(&g.weights) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *w += *v;
                }
                for ((b, v), g) in layer.biases.iter_mut().zip(vb.iter_mut()).zip(&g.biases) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *b += *v;
                }
            }
        }
        let epoch_loss = dataset_loss(&net, &xs, &all_targets, loss, scale.as_ref());
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                sample: 0,
                epoch: Some(epoch),
                batch: None,
            });
        }
        epoch_losses.push(epoch_loss);
    }

    if let Some(s) = &scale {
        let last = net.layers.last_mut().expect("at least one layer");
        for o in 0..last.out_dim {
            let sd = s.stds[o];
            last.weights[o * last.in_dim..(o + 1) * last.in_dim].iter_mut().for_each(|w| *w *= sd);
            last.biases[o] = sd * last.biases[o] + s.means[o];
        }
    }
    net.standardizer = standardizer;
    net.validate()?;

    let report = TrainReport {
        task,
        architecture: net.architecture(),
        rows: n,
        batches_per_epoch,
        initial_loss,
        final_loss: *epoch_losses.last().expect("epochs > 0"),
        epoch_losses,
        config: cfg.clone(),
    };
    Ok((net, report))
}
