//! Brute-force reference implementations and generators shared by the
//! integration tests.

#![allow(dead_code)]

use xaieval_core::model::{Dense, LayerSpec, Padding};
use xaieval_core::{Classifier, Layer, Model, OutputHead, Rng, Tensor};

pub fn oracle_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation from the sample covariance definition, or `None` when
/// either input is constant.
pub fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (oracle_mean(x), oracle_mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0);
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0);
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// 1-based average ranks by counting smaller and equal entries.
pub fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
pub fn oracle_roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (s, &l) in scores.iter().zip(labels) {
        if !l {
            continue;
        }
        for (t, &m) in scores.iter().zip(labels) {
            if m {
                continue;
            }
            pairs += 1.0;
            if s > t {
                wins += 1.0;
            } else if s == t {
                wins += 0.5;
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Gini index of `|v|` as the mean absolute difference over all ordered
/// pairs divided by twice the mean.
pub fn oracle_gini(v: &[f64]) -> Option<f64> {
    let a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let total: f64 = a.iter().sum();
    if total == 0.0 {
        return None;
    }
    let n = a.len() as f64;
    let diffs: f64 = a.iter().flat_map(|x| a.iter().map(move |y| (x - y).abs())).sum();
    Some(diffs / (2.0 * n * total))
}

/// Entropy in nats as `ln T - Σ v ln v / T`.
pub fn oracle_entropy(p: &[f64]) -> Option<f64> {
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
    Some(total.ln() - s / total)
}

/// Trapezoid rule on `[0, 1]` as `h (Σy - (y₀ + yₙ)/2)`.
pub fn oracle_trapezoid(ys: &[f64]) -> f64 {
    let h = 1.0 / (ys.len() - 1) as f64;
    h * (ys.iter().sum::<f64>() - (ys[0] + ys[ys.len() - 1]) / 2.0)
}

/// Random vector of length `n`; with `coarse` the entries come from a small
/// grid so ties are common.
pub fn random_vector(rng: &mut Rng, n: usize, coarse: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if coarse {
                rng.below(4) as f64 * 0.5 - 0.5
            } else {
                rng.uniform_range(-2.0, 2.0)
            }
        })
        .collect()
}

/// A small dense or convolutional network with random weights.
pub fn random_architecture(rng: &mut Rng) -> Model {
    let classes = 2 + rng.below(3);
    if rng.below(2) == 0 {
        let d = 2 + rng.below(7);
        let mut specs = Vec::new();
        for _ in 0..1 + rng.below(3) {
            specs.push(LayerSpec::Dense { out: 2 + rng.below(6) });
            specs.push(LayerSpec::Relu);
        }
        specs.push(LayerSpec::Dense { out: classes });
        Model::init(vec![d], &specs, OutputHead::Softmax, rng).expect("valid dense stack")
    } else {
        let c = 1 + rng.below(2);
        let side = 4 + rng.below(3);
        let padding = if rng.below(2) == 0 { Padding::Valid } else { Padding::Same };
        let specs = vec![
            LayerSpec::Conv2d {
                out_channels: 1 + rng.below(3),
                kernel: 1 + rng.below(3),
                stride: 1 + rng.below(2),
                padding,
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense { out: 3 + rng.below(4) },
            LayerSpec::Relu,
            LayerSpec::Dense { out: classes },
        ];
        Model::init(vec![c, side, side], &specs, OutputHead::Softmax, rng).expect("valid conv stack")
    }
}

/// Largest relative error between the analytic logit gradient and central
/// differences with step `h`, over every class.
pub fn gradient_relative_error(model: &Model, x: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    for class in 0..model.num_classes() {
        let mut shape = vec![1];
        shape.extend_from_slice(model.input_shape());
        let batch = Tensor::new(shape, x.to_vec()).expect("sample shape");
        let g = model.input_gradient(&batch, &[class]).expect("gradient").data().to_vec();
        let mut fd = vec![0.0; x.len()];
        for i in 0..x.len() {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            fd[i] = (model.logits(&up)[class] - model.logits(&down)[class]) / (2.0 * h);
        }
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}

/// Linear two-class model `z = W x + b` with a logit head.
pub fn linear_model(d: usize, rng: &mut Rng) -> Model {
    let dense = Dense {
        in_dim: d,
        out_dim: 2,
        weights: (0..2 * d).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
        bias: (0..2).map(|_| rng.uniform_range(-0.5, 0.5)).collect(),
    };
    Model::new(vec![d], vec![Layer::Dense(dense)], 2, OutputHead::Logits).expect("valid")
}
