//! Complexity: how concentrated is the attribution mass?

use super::{
    shared_params, Category, Direction, Metric, MetricConfig, ParamKind, ParamSpec, ParamValue,
    SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

fn zero_to_attr(e: Error) -> Error {
    match e {
        Error::AllZero => Error::AllZeroAttribution,
        other => other,
    }
}

/// Gini index of `|a|`.
pub fn sparseness(a: &[f64]) -> Result<f64> {
    stats::gini(a).map_err(zero_to_attr)
}

/// Entropy of `|a|` as a distribution.
pub fn complexity(a: &[f64]) -> Result<f64> {
    let abs: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    stats::entropy(&abs).map_err(zero_to_attr)
}

/// Number of features whose max-abs-normalised magnitude exceeds `eps`.
pub fn effective_complexity(a: &[f64], eps: f64) -> Result<f64> {
    let max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::AllZeroAttribution);
    }
    Ok(a.iter().filter(|v| v.abs() / max > eps).count() as f64)
}

pub struct Sparseness;

impl Metric for Sparseness {
    fn name(&self) -> &'static str {
        "sparseness"
    }
    fn category(&self) -> Category {
        Category::Complexity
    }
    fn direction(&self) -> Direction {
        Direction::HigherBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        shared_params(false)
    }
    fn score(&self, ctx: &SampleContext<'_>, _cfg: &MetricConfig, _rng: &mut Rng) -> Result<SampleScore> {
        sparseness(ctx.attribution).map(SampleScore::scalar)
    }
}

pub struct Complexity;

impl Metric for Complexity {
    fn name(&self) -> &'static str {
        "complexity"
    }
    fn category(&self) -> Category {
        Category::Complexity
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        shared_params(false)
    }
    fn score(&self, ctx: &SampleContext<'_>, _cfg: &MetricConfig, _rng: &mut Rng) -> Result<SampleScore> {
        complexity(ctx.attribution).map(SampleScore::scalar)
    }
}

pub struct EffectiveComplexity;

impl Metric for EffectiveComplexity {
    fn name(&self) -> &'static str {
        "effective_complexity"
    }
    fn category(&self) -> Category {
        Category::Complexity
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![
            ParamSpec::new("eps", ParamKind::Float { min: 0.0 }, ParamValue::Float(0.01)).sensitive(),
        ];
        v.extend(shared_params(false));
        v
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, _rng: &mut Rng) -> Result<SampleScore> {
        effective_complexity(ctx.attribution, cfg.float("eps")).map(SampleScore::scalar)
    }
}
