//! Toy SGD trainer for building desk-scale fixtures.

use super::{softmax, Classifier, Conv2d, Dense, Layer, LayerGrads, Model, OutputHead, Padding};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Architecture description used to initialise a model.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense { out: usize },
    Conv2d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Relu,
    Flatten,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// L2 penalty coefficient applied to weights, not biases.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.05,
            batch_size: 16,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch.
    pub losses: Vec<f64>,
    /// Accuracy on the training set after the last epoch.
    pub accuracy: f64,
}

impl Model {
    /// He-initialised model; the final layer's width sets `num_classes`.
    pub fn init(
        input_shape: Vec<usize>,
        specs: &[LayerSpec],
        head: OutputHead,
        rng: &mut Rng,
    ) -> Result<Model> {
        let mut shape = input_shape.clone();
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = match *spec {
                LayerSpec::Dense { out } => {
                    let in_dim: usize = shape.iter().product();
                    let scale = (2.0 / in_dim as f64).sqrt();
                    Layer::Dense(Dense {
                        in_dim,
                        out_dim: out,
                        weights: (0..in_dim * out).map(|_| rng.normal() * scale).collect(),
                        bias: vec![0.0; out],
                    })
                }
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let in_channels = *shape.first().ok_or_else(|| {
                        Error::ShapeInconsistency("conv2d needs a [C, H, W] input".into())
                    })?;
                    let fan_in = in_channels * kernel * kernel;
                    let scale = (2.0 / fan_in as f64).sqrt();
                    Layer::Conv2d(Conv2d {
                        in_channels,
                        out_channels,
                        kernel: (kernel, kernel),
                        stride,
                        padding,
                        weights: (0..out_channels * fan_in)
                            .map(|_| rng.normal() * scale)
                            .collect(),
                        bias: vec![0.0; out_channels],
                    })
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Flatten => Layer::Flatten,
            };
            shape = layer.output_shape(&shape)?;
            layers.push(layer);
        }
        let num_classes = match shape.as_slice() {
            [n] => *n,
            other => {
                return Err(Error::ShapeInconsistency(format!(
                    "final layer output {other:?} is not a class vector"
                )))
            }
        };
        Model::new(input_shape, layers, num_classes, head)
    }
}

/// Mini-batch SGD on softmax cross-entropy.
pub fn train_toy(
    model: &Model,
    inputs: &Tensor,
    labels: &[usize],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Model, TrainReport)> {
    model.check_batch(inputs)?;
    if labels.len() != inputs.batch_size() {
        return Err(Error::LengthMismatch {
            left: inputs.batch_size(),
            right: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= model.num_classes) {
        return Err(Error::InvalidClass {
            class: bad,
            num_classes: model.num_classes,
        });
    }
    let mut model = model.clone();
    let n = inputs.batch_size();
    let batch = cfg.batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads: Vec<LayerGrads> = model
                .layers
                .iter()
                .map(|l| l.params().map(|(w, b)| (vec![0.0; w.len()], vec![0.0; b.len()])))
                .collect();
            for &i in chunk {
                let acts = model.forward_cached(inputs.sample_data(i));
                let p = softmax(acts.last().unwrap());
                epoch_loss -= p[labels[i]].max(1e-300).ln();
                let mut g = p;
                g[labels[i]] -= 1.0;
                model.backward(&acts, g, Some(&mut grads));
            }
            let step = cfg.lr / chunk.len() as f64;
            for (layer, grad) in model.layers.iter_mut().zip(grads) {
                if let (Some((w, b)), Some((gw, gb))) = (layer.params_mut(), grad) {
                    let decay = cfg.lr * cfg.weight_decay;
                    w.iter_mut().zip(gw).for_each(|(p, g)| *p -= step * g + decay * *p);
                    b.iter_mut().zip(gb).for_each(|(p, g)| *p -= step * g);
                }
            }
        }
        losses.push(epoch_loss / n as f64);
    }
    let accuracy = accuracy(&model, inputs, labels);
    Ok((model, TrainReport { losses, accuracy }))
}

/// Fraction of samples whose arg-max logit equals the label.
pub fn accuracy(model: &impl Classifier, inputs: &Tensor, labels: &[usize]) -> f64 {
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(&model.logits(inputs.sample_data(i))) == y)
        .count();
    hits as f64 / labels.len() as f64
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(rng: &mut Rng, n: usize) -> (Tensor, Vec<usize>) {
        let mut data = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.below(2);
            let (cx, cy) = if y == 1 { (1.0, 1.0) } else { (-1.0, -1.0) };
            data.push(cx + 0.3 * rng.normal());
            data.push(cy + 0.3 * rng.normal());
            labels.push(y);
        }
        (Tensor::new(vec![n, 2], data).unwrap(), labels)
    }

    #[test]
    fn learns_separable_problem() {
        let mut rng = Rng::from_seed(1);
        let (x, y) = separable(&mut rng, 200);
        let m = Model::init(vec![2], &[LayerSpec::Dense { out: 2 }], OutputHead::Logits, &mut rng)
            .unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            lr: 0.05,
            batch_size: 16,
            weight_decay: 0.0,
        };
        let (_, report) = train_toy(&m, &x, &y, &cfg, &mut rng).unwrap();
        assert!(report.accuracy >= 0.95, "accuracy {}", report.accuracy);
    }

    #[test]
    fn zero_learning_rate_is_noop() {
        let mut rng = Rng::from_seed(2);
        let (x, y) = separable(&mut rng, 20);
        let m = Model::init(
            vec![2],
            &[LayerSpec::Dense { out: 4 }, LayerSpec::Relu, LayerSpec::Dense { out: 2 }],
            OutputHead::Logits,
            &mut rng,
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            lr: 0.0,
            batch_size: 4,
            weight_decay: 0.0,
        };
        let (trained, _) = train_toy(&m, &x, &y, &cfg, &mut rng).unwrap();
        assert_eq!(trained, m);
    }

    #[test]
    fn same_seed_same_parameters() {
        let run = || {
            let mut rng = Rng::from_seed(3);
            let (x, y) = separable(&mut rng, 40);
            let m = Model::init(
                vec![2],
                &[LayerSpec::Dense { out: 4 }, LayerSpec::Relu, LayerSpec::Dense { out: 2 }],
                OutputHead::Softmax,
                &mut rng,
            )
            .unwrap();
            train_toy(&m, &x, &y, &TrainConfig { epochs: 5, ..Default::default() }, &mut rng)
                .unwrap()
                .0
        };
        assert_eq!(run().parameters(), run().parameters());
    }
}
