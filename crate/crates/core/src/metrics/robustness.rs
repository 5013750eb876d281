//! Robustness: how much do explanations move under small input changes?

use super::{
    prepare_attribution, shared_params, Category, Direction, Metric, MetricConfig, ParamKind,
    ParamSpec, ParamValue, SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::explain::explain_sample;
use crate::perturb::uniform_ball_perturb;
use crate::rng::Rng;
use crate::stats::l2_norm;

/// Re-run an explanation at a perturbed input.
pub type ExplainFn<'a> = dyn FnMut(&[f64], &mut Rng) -> Result<Vec<f64>> + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Max,
    Mean,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Relative explanation change `‖e(x') − e(x)‖ / ‖e(x)‖` aggregated over
/// `n_perturb` uniform draws in the L∞ ball of `radius`.
pub fn sensitivity(
    explain: &mut ExplainFn<'_>,
    x: &[f64],
    reference: &[f64],
    radius: f64,
    n_perturb: usize,
    agg: Aggregation,
    rng: &mut Rng,
) -> Result<f64> {
    if radius.is_nan() || radius <= 0.0 || n_perturb == 0 {
        return Err(Error::InvalidParameter(
            "sensitivity needs radius > 0 and n_perturb >= 1".into(),
        ));
    }
    let norm = l2_norm(reference);
    if norm == 0.0 {
        return Err(Error::ZeroNormExplanation);
    }
    let mut ratios = Vec::with_capacity(n_perturb);
    for _ in 0..n_perturb {
        let xp = uniform_ball_perturb(x, radius, rng);
        let e = explain(&xp, rng)?;
        ratios.push(distance(&e, reference) / norm);
    }
    Ok(match agg {
        Aggregation::Max => ratios.iter().copied().fold(0.0, f64::max),
        Aggregation::Mean => crate::stats::mean(&ratios),
    })
}

const MAX_REDRAWS: usize = 1000;

/// Largest `‖e(x) − e(x')‖ / ‖x − x'‖` over `n_perturb` draws. Draws closer
/// than 1e-12 to `x` are rejected and redrawn.
pub fn local_lipschitz(
    explain: &mut ExplainFn<'_>,
    x: &[f64],
    reference: &[f64],
    radius: f64,
    n_perturb: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if radius.is_nan() || radius <= 0.0 || n_perturb == 0 {
        return Err(Error::InvalidParameter(
            "local_lipschitz needs radius > 0 and n_perturb >= 1".into(),
        ));
    }
    let mut best = 0.0f64;
    for _ in 0..n_perturb {
        let mut tries = 0;
        let xp = loop {
            let candidate = uniform_ball_perturb(x, radius, rng);
            if distance(&candidate, x) >= 1e-12 {
                break candidate;
            }
            tries += 1;
            if tries >= MAX_REDRAWS {
                return Err(Error::InvalidParameter(format!(
                    "radius {radius} too small to draw a distinct neighbour"
                )));
            }
        };
        let e = explain(&xp, rng)?;
        best = best.max(distance(reference, &e) / distance(x, &xp));
    }
    Ok(best)
}

fn robustness_params() -> Vec<ParamSpec> {
    let mut v = vec![
        ParamSpec::new("radius", ParamKind::Float { min: 1e-12 }, ParamValue::Float(0.1)).sensitive(),
        ParamSpec::new("n_perturb", ParamKind::Int { min: 1 }, ParamValue::Int(20)),
    ];
    v.extend(shared_params(false));
    v
}

pub struct Sensitivity {
    agg: Aggregation,
}

impl Sensitivity {
    pub fn max() -> Self {
        Self { agg: Aggregation::Max }
    }

    pub fn avg() -> Self {
        Self { agg: Aggregation::Mean }
    }
}

fn rerun<'a>(
    ctx: &'a SampleContext<'a>,
    cfg: &'a MetricConfig,
) -> Result<impl FnMut(&[f64], &mut Rng) -> Result<Vec<f64>> + 'a> {
    let explainer = ctx.require_explainer()?;
    Ok(move |xp: &[f64], rng: &mut Rng| {
        let e = explain_sample(ctx.model, xp, ctx.class, explainer, rng)?;
        prepare_attribution(&e, cfg)
    })
}

impl Metric for Sensitivity {
    fn name(&self) -> &'static str {
        match self.agg {
            Aggregation::Max => "max_sensitivity",
            Aggregation::Mean => "avg_sensitivity",
        }
    }
    fn category(&self) -> Category {
        Category::Robustness
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        robustness_params()
    }
    fn requirements(&self) -> super::Requirements {
        super::Requirements {
            explainer: true,
            ..Default::default()
        }
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let mut e = rerun(ctx, cfg)?;
        sensitivity(
            &mut e,
            ctx.x,
            ctx.attribution,
            cfg.float("radius"),
            cfg.usize("n_perturb"),
            self.agg,
            rng,
        )
        .map(SampleScore::scalar)
    }
}

pub struct LocalLipschitz;

impl Metric for LocalLipschitz {
    fn name(&self) -> &'static str {
        "local_lipschitz"
    }
    fn category(&self) -> Category {
        Category::Robustness
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        robustness_params()
    }
    fn requirements(&self) -> super::Requirements {
        super::Requirements {
            explainer: true,
            ..Default::default()
        }
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let mut e = rerun(ctx, cfg)?;
        local_lipschitz(
            &mut e,
            ctx.x,
            ctx.attribution,
            cfg.float("radius"),
            cfg.usize("n_perturb"),
            rng,
        )
        .map(SampleScore::scalar)
    }
}
