//! Randomisation: explanations should depend on the learned parameters and
//! on the explained class.

use super::{
    prepare_attribution, shared_params, Category, Direction, Metric, MetricConfig, ParamKind,
    ParamSpec, ParamValue, Requirements, SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::explain::{explain_sample, ExplainerConfig};
use crate::model::{Classifier, Model};
use crate::rng::Rng;
use crate::stats::spearman;

fn magnitudes(a: Vec<f64>) -> Vec<f64> {
    a.into_iter().map(f64::abs).collect()
}

/// Spearman correlation between `|e|` on the original model and `|e|` on
/// models with the top `k` parameterized layers randomised, for
/// `k = 0..=layers` (or `max_layers` when given). Randomisation is cumulative
/// from the output. Every explanation run starts from the same random stream.
pub fn parameter_randomisation_curve(
    model: &Model,
    x: &[f64],
    class: usize,
    explainer: &ExplainerConfig,
    post: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    max_layers: Option<usize>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let available = model.parameterized_layers().len();
    let depth = max_layers.unwrap_or(available);
    if depth > available {
        return Err(Error::KTooLarge {
            k: depth,
            available,
        });
    }
    let layer_seed = rng.next_u64();
    let explain_rng = Rng::from_seed(rng.next_u64());
    let run = |m: &Model| -> Result<Vec<f64>> {
        let mut r = explain_rng.clone();
        Ok(magnitudes(post(&explain_sample(m, x, class, explainer, &mut r)?)?))
    };
    let reference = run(model)?;
    let mut curve = Vec::with_capacity(depth + 1);
    curve.push(spearman(&reference, &reference)?);
    for k in 1..=depth {
        let randomised = model.randomise_layers(k, &mut Rng::from_seed(layer_seed))?;
        curve.push(spearman(&reference, &run(&randomised)?)?);
    }
    Ok(curve)
}

/// Spearman correlation between `|e(x, class)|` and `|e(x, other)|` for a
/// uniformly drawn other class. Both explanations start from the same random
/// stream, so a method that ignores the class scores 1.
pub fn random_logit(
    model: &dyn Classifier,
    x: &[f64],
    class: usize,
    explainer: &ExplainerConfig,
    post: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    rng: &mut Rng,
) -> Result<f64> {
    let n = model.num_classes();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "random_logit needs at least two classes".into(),
        ));
    }
    if class >= n {
        return Err(Error::InvalidClass {
            class,
            num_classes: n,
        });
    }
    let mut other = rng.below(n - 1);
    if other >= class {
        other += 1;
    }
    let explain_rng = Rng::from_seed(rng.next_u64());
    let run = |c: usize| -> Result<Vec<f64>> {
        let mut r = explain_rng.clone();
        Ok(magnitudes(post(&explain_sample(model, x, c, explainer, &mut r)?)?))
    };
    spearman(&run(class)?, &run(other)?)
}

pub struct ModelParameterRandomisation;

impl Metric for ModelParameterRandomisation {
    fn name(&self) -> &'static str {
        "model_parameter_randomisation"
    }
    fn category(&self) -> Category {
        Category::Randomisation
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![ParamSpec::new(
            "max_layers",
            ParamKind::Int { min: -1 },
            ParamValue::Int(-1),
        )];
        v.extend(shared_params(false));
        v
    }
    fn requirements(&self) -> Requirements {
        Requirements {
            explainer: true,
            ..Default::default()
        }
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let explainer = ctx.require_explainer()?;
        let post = |a: &[f64]| prepare_attribution(a, cfg);
        let max_layers = usize::try_from(cfg.int("max_layers")).ok();
        let curve = parameter_randomisation_curve(ctx.model, ctx.x, ctx.class, explainer, &post, max_layers, rng)?;
        if curve.len() < 2 {
            return Err(Error::TooShort { need: 2, got: curve.len() });
        }
        let tail: Vec<f64> = curve[1..].iter().map(|r| r.abs()).collect();
        Ok(SampleScore::curve(crate::stats::mean(&tail), curve))
    }
}

pub struct RandomLogit;

impl Metric for RandomLogit {
    fn name(&self) -> &'static str {
        "random_logit"
    }
    fn category(&self) -> Category {
        Category::Randomisation
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        shared_params(false)
    }
    fn requirements(&self) -> Requirements {
        Requirements {
            explainer: true,
            ..Default::default()
        }
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let explainer = ctx.require_explainer()?;
        let post = |a: &[f64]| prepare_attribution(a, cfg);
        random_logit(ctx.model, ctx.x, ctx.class, explainer, &post, rng).map(SampleScore::scalar)
    }
}
