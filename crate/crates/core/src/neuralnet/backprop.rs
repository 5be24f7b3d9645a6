use serde::{Deserialize, Serialize};

use super::{axpy, log_sum_exp, Activation, DenseNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `-ln p[target]` of a softmax output.
    CrossEntropy,
    /// `½ Σ (output - target)²`.
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Class(usize),
    Values(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradients of the mean batch loss, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }
}

/// Loss of one sample given the final pre-activation `z` and activation `a`.
pub(crate) fn sample_loss(loss: Loss, z: &[f64], a: &[f64], target: &Target<'_>) -> f64 {
    match (loss, target) {
        (Loss::CrossEntropy, Target::Class(c)) => log_sum_exp(z) - z[*c],
        (Loss::SquaredError, Target::Values(t)) => {
            0.5 * a.iter().zip(t.iter()).map(|(y, t)| (y - t) * (y - t)).sum::<f64>()
        }
        (Loss::SquaredError, Target::Class(c)) => {
            0.5 * a
                .iter()
                .enumerate()
                .map(|(k, y)| {
                    let t = if k == *c { 1.0 } else { 0.0 };
                    (y - t) * (y - t)
                })
                .sum::<f64>()
        }
        (Loss::CrossEntropy, Target::Values(_)) => f64::NAN,
    }
}

fn check_targets(net: &DenseNetwork, targets: &[Target<'_>], loss: Loss) -> Result<()> {
    let out = net.output_width();
    let last = net.layers.last().map(|l| l.activation);
    if loss == Loss::CrossEntropy && last != Some(Activation::Softmax) {
        return Err(Error::InvalidConfig("cross-entropy needs a softmax output layer".into()));
    }
    for t in targets {
        match (loss, t) {
            (_, Target::Class(c)) if *c >= out => {
                return Err(Error::InvalidConfig(format!("class {c} out of range for {out} outputs")))
            }
            (Loss::CrossEntropy, Target::Values(_)) => {
                return Err(Error::InvalidConfig("cross-entropy needs class targets".into()))
            }
            (_, Target::Values(v)) if v.len() != out => {
                return Err(Error::WidthMismatch { expected: out, found: v.len() })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Exact gradients of the mean loss over a batch, by backpropagation.
///
/// Returns the mean loss together with the gradients. A sample whose loss is
/// not finite aborts with its index in the batch.
pub fn gradients(
    net: &DenseNetwork,
    inputs: &[&[f64]],
    targets: &[Target<'_>],
    loss: Loss,
) -> Result<(f64, Gradients)> {
    if inputs.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if inputs.len() != targets.len() {
        return Err(Error::WidthMismatch {
            expected: inputs.len(),
            found: targets.len(),
        });
    }
    for x in inputs {
        if x.len() != net.input_width() {
            return Err(Error::WidthMismatch {
                expected: net.input_width(),
                found: x.len(),
            });
        }
    }
    check_targets(net, targets, loss)?;

    let n_layers = net.layers.len();
    let batch = inputs.len();
    let scale = 1.0 / batch as f64;
    let mut grads = Gradients::zeros_like(net);
    let mut total = 0.0;

    // Per-sample activations, reused across the batch.
    let mut acts: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
    let mut logits = vec![0.0; net.output_width()];
    let mut delta: Vec<f64> = Vec::new();
    let mut prev_delta: Vec<f64> = Vec::new();

    for (b, (x, target)) in inputs.iter().zip(targets).enumerate() {
        for (i, layer) in net.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(i);
            let input: &[f64] = if i == 0 { x } else { &done[i - 1] };
            layer.affine(input, &mut rest[0]);
            if i + 1 == n_layers {
                logits.copy_from_slice(&rest[0]);
            }
            layer.activation.apply(&mut rest[0]);
        }
        let output = &acts[n_layers - 1];
        let l = sample_loss(loss, &logits, output, target);
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss {
                sample: b,
                epoch: None,
                batch: None,
            });
        }
        total += l;

        // Gradient with respect to the final pre-activation.
        delta.clear();
        match (loss, target) {
            (Loss::CrossEntropy, Target::Class(c)) => {
                delta.extend_from_slice(output);
                delta[*c] -= 1.0;
            }
            (Loss::SquaredError, _) => {
                delta.extend(output.iter().enumerate().map(|(k, y)| {
                    let t = match target {
                        Target::Values(t) => t[k],
                        Target::Class(c) => f64::from(u8::from(k == *c)),
                    };
                    y - t
                }));
                let last = &net.layers[n_layers - 1];
                match last.activation {
                    Activation::Linear => {}
                    Activation::Relu => {
                        for (d, z) in delta.iter_mut().zip(&logits) {
                            if *z <= 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                    Activation::Softmax => {
                        let s: f64 = delta.iter().zip(output).map(|(d, p)| d * p).sum();
                        for (d, p) in delta.iter_mut().zip(output) {
                            *d = p * (*d - s);
                        }
                    }
                }
            }
            (Loss::CrossEntropy, Target::Values(_)) => unreachable!("rejected by check_targets"),
        }
        delta.iter_mut().for_each(|d| *d *= scale);

        for i in (0..n_layers).rev() {
            let layer = &net.layers[i];
            let input: &[f64] = if i == 0 { x } else { &acts[i - 1] };
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                axpy(&mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim], d, input);
            }
            if i == 0 {
                break;
            }
            prev_delta.clear();
            prev_delta.resize(layer.in_dim, 0.0);
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(&mut prev_delta, d, layer.row(o));
                }
            }
            match net.layers[i - 1].activation {
                Activation::Relu => {
                    for (d, a) in prev_delta.iter_mut().zip(&acts[i - 1]) {
                        if *a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Linear => {}
                Activation::Softmax => unreachable!("softmax is final-only"),
            }
            std::mem::swap(&mut delta, &mut prev_delta);
        }
    }
    Ok((total * scale, grads))
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::super::testnet::random_net;
    use super::super::{DenseLayer, Task};
    use super::*;
    use crate::seed;

    fn mean_loss(net: &DenseNetwork, xs: &[&[f64]], ts: &[Target<'_>], loss: Loss) -> f64 {
        gradients(net, xs, ts, loss).unwrap().0
    }

    fn param_mut(net: &mut DenseNetwork, li: usize, pi: usize) -> &mut f64 {
        let l = &mut net.layers[li];
        let nw = l.weights.len();
        if pi < nw {
            &mut l.weights[pi]
        } else {
            &mut l.biases[pi - nw]
        }
    }

    fn finite_difference_check(net: &mut DenseNetwork, xs: &[&[f64]], ts: &[Target<'_>], loss: Loss) {
        let (_, g) = gradients(net, xs, ts, loss).unwrap();
        let h = 1e-5;
        for li in 0..net.layers.len() {
            for pi in 0..net.layers[li].weights.len() + net.layers[li].biases.len() {
                let nw = net.layers[li].weights.len();
                let orig = *param_mut(net, li, pi);
                *param_mut(net, li, pi) = orig + h;
                let up = mean_loss(net, xs, ts, loss);
                *param_mut(net, li, pi) = orig - h;
                let down = mean_loss(net, xs, ts, loss);
                *param_mut(net, li, pi) = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = if pi < nw { g.layers[li].weights[pi] } else { g.layers[li].biases[pi - nw] };
                let err = (analytic - numeric).abs() / numeric.abs().max(1.0);
                assert!(err < 1e-4, "layer {li} param {pi}: analytic {analytic} numeric {numeric}");
            }
        }
    }

    #[test]
    fn finite_differences_match_for_both_losses() {
        let mut rng = seed::rng(11);
        for trial in 0..8 {
            let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let x_refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();

            let mut net = random_net(&mut rng, &[4, 6, 5, 3], Activation::Softmax, Task::Classification(3));
            let classes: Vec<Target> = (0..5).map(|i| Target::Class((i + trial) % 3)).collect();
            finite_difference_check(&mut net, &x_refs, &classes, Loss::CrossEntropy);
            finite_difference_check(&mut net, &x_refs, &classes, Loss::SquaredError);

            let ys: Vec<Vec<f64>> = (0..5).map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let values: Vec<Target> = ys.iter().map(|y| Target::Values(y)).collect();
            let mut reg = random_net(&mut rng, &[4, 6, 2], Activation::Linear, Task::Regression(2));
            finite_difference_check(&mut reg, &x_refs, &values, Loss::SquaredError);
        }
    }

    #[test]
    fn zero_network_has_zero_gradients() {
        let net = DenseNetwork::new(vec![DenseLayer::zeros(3, 2, Activation::Linear)], Task::Regression(2), None).unwrap();
        let x = [0.0; 3];
        let t = [0.0; 2];
        let (loss, g) = gradients(&net, &[&x], &[Target::Values(&t)], Loss::SquaredError).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|v| *v == 0.0)));
    }

    #[test]
    fn softmax_output_gradient_is_closed_form() {
        let mut rng = seed::rng(5);
        let net = random_net(&mut rng, &[3, 4], Activation::Softmax, Task::Classification(4));
        let xs = [[0.3, -1.0, 2.0], [1.0, 0.5, -0.5]];
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let ts = [Target::Class(2), Target::Class(0)];
        let (_, g) = gradients(&net, &refs, &ts, Loss::CrossEntropy).unwrap();
        let mut expect = [0.0; 4];
        for (x, t) in xs.iter().zip([2usize, 0]) {
            let p = net.forward(x).unwrap();
            for (k, e) in expect.iter_mut().enumerate() {
                *e += (p[k] - f64::from(u8::from(k == t))) / 2.0;
            }
        }
        for (g, e) in g.layers[0].biases.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_loss_names_sample() {
        let mut l = DenseLayer::zeros(1, 1, Activation::Linear);
        l.weights[0] = 1.0;
        let net = DenseNetwork::new(vec![l], Task::Regression(1), None).unwrap();
        let xs = [[1.0], [1e200]];
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let t = [0.0];
        let ts = [Target::Values(&t), Target::Values(&t)];
        assert!(matches!(
            gradients(&net, &refs, &ts, Loss::SquaredError),
            Err(Error::NonFiniteLoss { sample: 1, .. })
        ));
    }
}
