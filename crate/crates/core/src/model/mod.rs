//! Minimal feed-forward networks: dense, conv2d, relu and flatten layers.
//!
//! A [`Model`] is immutable once built. Forward and input-gradient passes are
//! pure and may run concurrently on a shared model; transformations such as
//! [`Model::randomise_layers`] return a fresh copy.

mod conv;
pub mod qnn;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub use conv::Padding;
pub use train::{accuracy, train_toy, LayerSpec, TrainConfig, TrainReport};

/// Prediction access every metric relies on.
///
/// `Model` is the bundled realization; anything that can produce class scores
/// and logit gradients for a single sample can be evaluated.
pub trait Classifier: Sync {
    fn input_shape(&self) -> &[usize];
    fn num_classes(&self) -> usize;
    /// Pre-head class scores for one flattened sample.
    fn logits(&self, x: &[f64]) -> Vec<f64>;
    /// Post-head class scores (softmax or logits) for one flattened sample.
    fn scores(&self, x: &[f64]) -> Vec<f64>;
    /// Gradient of logit `class` with respect to the flattened input.
    fn logit_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>>;

    fn input_len(&self) -> usize {
        self.input_shape().iter().product()
    }

    /// Post-head score of `class` for each of `inputs`.
    fn class_scores(&self, inputs: &[Vec<f64>], class: usize) -> Vec<f64> {
        inputs.iter().map(|x| self.scores(x)[class]).collect()
    }
}

/// Weight and bias gradients of one layer; `None` for layers without
/// parameters.
pub(crate) type LayerGrads = Option<(Vec<f64>, Vec<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputHead {
    Logits,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `[out][in]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: Padding,
    /// Row-major `[out_ch][in_ch][kh][kw]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Relu,
    Flatten,
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
        }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, Layer::Dense(_) | Layer::Conv2d(_))
    }

    fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Dense(d) => Some((&d.weights, &d.bias)),
            Layer::Conv2d(c) => Some((&c.weights, &c.bias)),
            _ => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::Dense(d) => Some((&mut d.weights, &mut d.bias)),
            Layer::Conv2d(c) => Some((&mut c.weights, &mut c.bias)),
            _ => None,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let n: usize = input.iter().product();
        match self {
            Layer::Dense(d) => {
                if d.weights.len() != d.in_dim * d.out_dim || d.bias.len() != d.out_dim {
                    return Err(Error::ShapeInconsistency(format!(
                        "dense {}x{} has {} weights and {} biases",
                        d.out_dim,
                        d.in_dim,
                        d.weights.len(),
                        d.bias.len()
                    )));
                }
                if n != d.in_dim {
                    return Err(Error::ShapeInconsistency(format!(
                        "dense expects {} inputs, previous layer yields {input:?}",
                        d.in_dim
                    )));
                }
                Ok(vec![d.out_dim])
            }
            Layer::Conv2d(c) => c.output_shape(input),
            Layer::Relu => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![n]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    num_classes: usize,
    output_head: OutputHead,
    /// Input shape of every layer, plus the final output shape.
    shapes: Vec<Vec<usize>>,
}

impl Model {
    pub fn new(
        input_shape: Vec<usize>,
        layers: Vec<Layer>,
        num_classes: usize,
        output_head: OutputHead,
    ) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::ShapeInconsistency(format!(
                "invalid input shape {input_shape:?}"
            )));
        }
        if !layers.iter().any(Layer::is_parameterized) {
            return Err(Error::ShapeInconsistency(
                "model needs at least one dense or conv2d layer".into(),
            ));
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(shapes.last().unwrap())
                .map_err(|e| Error::ShapeInconsistency(format!("layer {i}: {e}")))?;
            shapes.push(next);
        }
        let out = shapes.last().unwrap();
        if out.len() != 1 || out[0] != num_classes {
            return Err(Error::ShapeInconsistency(format!(
                "final output shape {out:?} does not match num_classes {num_classes}"
            )));
        }
        Ok(Self {
            input_shape,
            layers,
            num_classes,
            output_head,
            shapes,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_head(&self) -> OutputHead {
        self.output_head
    }

    pub fn with_output_head(&self, head: OutputHead) -> Model {
        let mut m = self.clone();
        m.output_head = head;
        m
    }

    /// Indices into `layers()` of dense/conv2d layers, input side first.
    pub fn parameterized_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_parameterized())
            .map(|(i, _)| i)
            .collect()
    }

    fn check_batch(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() < 2 || x.sample_shape() != self.input_shape.as_slice() {
            let mut expected = vec![x.shape().first().copied().unwrap_or(1)];
            expected.extend_from_slice(&self.input_shape);
            return Err(Error::ShapeMismatch {
                expected,
                got: x.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Class scores `[batch, num_classes]` after the output head.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_batch(x)?;
        let mut out = Vec::with_capacity(x.batch_size() * self.num_classes);
        for i in 0..x.batch_size() {
            out.extend(self.scores(x.sample_data(i)));
        }
        Tensor::new(vec![x.batch_size(), self.num_classes], out)
    }

    /// Gradient of each sample's selected logit with respect to its input.
    pub fn input_gradient(&self, x: &Tensor, classes: &[usize]) -> Result<Tensor> {
        self.check_batch(x)?;
        if classes.len() != x.batch_size() {
            return Err(Error::LengthMismatch {
                left: x.batch_size(),
                right: classes.len(),
            });
        }
        let mut out = Vec::with_capacity(x.len());
        for (i, &c) in classes.iter().enumerate() {
            out.extend(self.logit_gradient(x.sample_data(i), c)?);
        }
        Tensor::new(x.shape().to_vec(), out)
    }

    /// Forward pass keeping every layer's input for the backward pass.
    fn forward_cached(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (layer, shape) in self.layers.iter().zip(&self.shapes) {
            let input = acts.last().unwrap();
            let next = match layer {
                Layer::Dense(d) => dense_forward(d, input),
                Layer::Conv2d(c) => c.forward(input, shape),
                Layer::Relu => input.iter().map(|&v| v.max(0.0)).collect(),
                Layer::Flatten => input.clone(),
            };
            acts.push(next);
        }
        acts
    }

    /// Propagate `grad_out` (w.r.t. the logits) back to the input. When
    /// `param_grads` is given, parameter gradients are accumulated into it.
    fn backward(
        &self,
        acts: &[Vec<f64>],
        grad_out: Vec<f64>,
        mut param_grads: Option<&mut [LayerGrads]>,
    ) -> Vec<f64> {
        let mut grad = grad_out;
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[idx];
            let pg = param_grads
                .as_deref_mut()
                .and_then(|g| g[idx].as_mut())
                .map(|(w, b)| (w, b));
            grad = match layer {
                Layer::Dense(d) => dense_backward(d, input, &grad, pg),
                Layer::Conv2d(c) => c.backward(input, &self.shapes[idx], &grad, pg),
                Layer::Relu => grad
                    .iter()
                    .zip(input)
                    .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 })
                    .collect(),
                Layer::Flatten => grad,
            };
        }
        grad
    }

    /// Copy of this model whose `k_top` parameterized layers closest to the
    /// output are redrawn i.i.d. normal from each parameter tensor's empirical
    /// mean and standard deviation. Layers are drawn output-first, so the same
    /// generator state yields cumulative randomisations for increasing `k_top`.
    pub fn randomise_layers(&self, k_top: usize, rng: &mut Rng) -> Result<Model> {
        let params = self.parameterized_layers();
        if k_top > params.len() {
            return Err(Error::KTooLarge {
                k: k_top,
                available: params.len(),
            });
        }
        let mut out = self.clone();
        for &idx in params.iter().rev().take(k_top) {
            let (w, b) = out.layers[idx].params_mut().expect("parameterized");
            redraw_normal(w, rng);
            redraw_normal(b, rng);
        }
        Ok(out)
    }

    /// Model `m2` with `m2(x + shift) == self(x)`, built by folding the shift
    /// into the first dense layer's bias.
    pub fn shift_compensated(&self, shift: &Tensor) -> Result<Model> {
        if shift.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.input_shape.clone(),
                got: shift.shape().to_vec(),
            });
        }
        let first = self
            .layers
            .iter()
            .position(|l| !matches!(l, Layer::Flatten))
            .expect("model has a parameterized layer");
        let Layer::Dense(d) = &self.layers[first] else {
            return Err(Error::UnsupportedArchitecture(format!(
                "first non-flatten layer is {}, expected dense",
                self.layers[first].kind()
            )));
        };
        let mut d = d.clone();
        let s = shift.data();
        for (o, b) in d.bias.iter_mut().enumerate() {
            let row = &d.weights[o * d.in_dim..(o + 1) * d.in_dim];
            *b -= row.iter().zip(s).map(|(w, v)| w * v).sum::<f64>();
        }
        let mut out = self.clone();
        out.layers[first] = Layer::Dense(d);
        Ok(out)
    }

    /// Every parameter value, layer by layer (weights then bias).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

impl Classifier for Model {
    fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (layer, shape) in self.layers.iter().zip(&self.shapes) {
            h = match layer {
                Layer::Dense(d) => dense_forward(d, &h),
                Layer::Conv2d(c) => c.forward(&h, shape),
                Layer::Relu => {
                    h.iter_mut().for_each(|v| *v = v.max(0.0));
                    h
                }
                Layer::Flatten => h,
            };
        }
        h
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.logits(x);
        match self.output_head {
            OutputHead::Logits => z,
            OutputHead::Softmax => softmax(&z),
        }
    }

    fn logit_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        if class >= self.num_classes {
            return Err(Error::InvalidClass {
                class,
                num_classes: self.num_classes,
            });
        }
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.input_shape.clone(),
                got: vec![x.len()],
            });
        }
        let acts = self.forward_cached(x);
        let mut seed = vec![0.0; self.num_classes];
        seed[class] = 1.0;
        Ok(self.backward(&acts, seed, None))
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn dense_forward(d: &Dense, x: &[f64]) -> Vec<f64> {
    d.weights
        .chunks_exact(d.in_dim)
        .zip(&d.bias)
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

fn dense_backward(
    d: &Dense,
    x: &[f64],
    grad: &[f64],
    params: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> Vec<f64> {
    let mut gin = vec![0.0; d.in_dim];
    for (row, g) in d.weights.chunks_exact(d.in_dim).zip(grad) {
        if *g == 0.0 {
            continue;
        }
        for (gi, w) in gin.iter_mut().zip(row) {
            *gi += w * g;
        }
    }
    if let Some((gw, gb)) = params {
        for (o, g) in grad.iter().enumerate() {
            gb[o] += g;
            for (gwi, xi) in gw[o * d.in_dim..(o + 1) * d.in_dim].iter_mut().zip(x) {
                *gwi += g * xi;
            }
        }
    }
    gin
}

fn redraw_normal(values: &mut [f64], rng: &mut Rng) {
    if values.is_empty() {
        return;
    }
    let mean = crate::stats::mean(values);
    let std = crate::stats::std_dev(values);
    for v in values.iter_mut() {
        *v = mean + std * rng.normal();
    }
}
