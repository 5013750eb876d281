//! Axiomatic: properties an attribution should satisfy by construction.
//!
//! These metrics compare attributions against the pre-head logit, the same
//! function the gradient explainers differentiate.

use super::{
    prepare_attribution, shared_params, Category, Direction, Metric, MetricConfig, ParamKind,
    ParamSpec, ParamValue, Requirements, SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::explain::{explain_sample, ExplainerConfig};
use crate::model::{Classifier, Model};
use crate::perturb::{replace_features, BaselineSpec};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Pass threshold for [`input_invariance`].
pub const INVARIANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletenessCheck {
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `|Σa − (f(x) − f(x₀))|` with a tolerance of `rel_tol · |f(x) − f(x₀)|`,
/// floored at `abs_floor`.
pub fn completeness(
    model: &dyn Classifier,
    x: &[f64],
    class: usize,
    a: &[f64],
    baseline: &BaselineSpec,
    rel_tol: f64,
    abs_floor: f64,
    rng: &mut Rng,
) -> Result<CompletenessCheck> {
    if a.len() != x.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![x.len()],
            got: vec![a.len()],
        });
    }
    let all: Vec<usize> = (0..x.len()).collect();
    let x0 = replace_features(x, &all, baseline, rng)?;
    let diff = model.logits(x)[class] - model.logits(&x0)[class];
    let gap = (a.iter().sum::<f64>() - diff).abs();
    let tolerance = (rel_tol * diff.abs()).max(abs_floor);
    Ok(CompletenessCheck {
        gap,
        tolerance,
        pass: gap <= tolerance,
    })
}

/// Count features whose attribution disagrees with their measured effect:
/// near-zero attribution but the output moves, or non-zero attribution but
/// every probe leaves the output unchanged.
pub fn non_sensitivity(
    model: &dyn Classifier,
    x: &[f64],
    class: usize,
    a: &[f64],
    eps_attr: f64,
    eps_out: f64,
    n_probe: usize,
    baseline: &BaselineSpec,
    rng: &mut Rng,
) -> Result<f64> {
    if a.len() != x.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![x.len()],
            got: vec![a.len()],
        });
    }
    if n_probe == 0 {
        return Err(Error::InvalidParameter("n_probe must be >= 1".into()));
    }
    let reference = model.logits(x)[class];
    let mut violations = 0usize;
    for (i, &ai) in a.iter().enumerate() {
        let mut any_change = false;
        for _ in 0..n_probe {
            let probe = replace_features(x, &[i], baseline, rng)?;
            if (model.logits(&probe)[class] - reference).abs() > eps_out {
                any_change = true;
                break;
            }
        }
        let insensitive_attr = ai.abs() <= eps_attr;
        if insensitive_attr == any_change {
            violations += 1;
        }
    }
    Ok(violations as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceCheck {
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Compare explanations of `model` at `x` with those of the shift-compensated
/// model at `x + shift`. Both runs see identical random streams.
pub fn input_invariance(
    model: &Model,
    x: &[f64],
    class: usize,
    shift: &[f64],
    explainer: &ExplainerConfig,
    post: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    rng: &mut Rng,
) -> Result<InvarianceCheck> {
    let shift_t = Tensor::new(model.input_shape().to_vec(), shift.to_vec())?;
    let shifted_model = model.shift_compensated(&shift_t)?;
    let xs: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a + b).collect();
    let mut rng2 = rng.clone();
    let a1 = post(&explain_sample(model, x, class, explainer, rng)?)?;
    let a2 = post(&explain_sample(&shifted_model, &xs, class, explainer, &mut rng2)?)?;
    let max_abs_diff = a1
        .iter()
        .zip(&a2)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    Ok(InvarianceCheck {
        max_abs_diff,
        pass: max_abs_diff <= INVARIANCE_TOL,
    })
}

pub struct Completeness;

impl Metric for Completeness {
    fn name(&self) -> &'static str {
        "completeness"
    }
    fn category(&self) -> Category {
        Category::Axiomatic
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![
            ParamSpec::new("baseline", ParamKind::Baseline, ParamValue::Text("black".into())).sensitive(),
            ParamSpec::new("rel_tol", ParamKind::Float { min: 0.0 }, ParamValue::Float(1e-3)),
            ParamSpec::new("abs_floor", ParamKind::Float { min: 0.0 }, ParamValue::Float(1e-6)),
        ];
        v.extend(shared_params(false));
        v
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let c = completeness(
            ctx.model,
            ctx.x,
            ctx.class,
            ctx.attribution,
            &cfg.baseline("baseline")?,
            cfg.float("rel_tol"),
            cfg.float("abs_floor"),
            rng,
        )?;
        Ok(SampleScore::check(c.gap, c.pass))
    }
}

pub struct NonSensitivity;

impl Metric for NonSensitivity {
    fn name(&self) -> &'static str {
        "non_sensitivity"
    }
    fn category(&self) -> Category {
        Category::Axiomatic
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![
            ParamSpec::new("eps_attr", ParamKind::Float { min: 0.0 }, ParamValue::Float(1e-6)).sensitive(),
            ParamSpec::new("eps_out", ParamKind::Float { min: 0.0 }, ParamValue::Float(1e-4)).sensitive(),
            ParamSpec::new("n_probe", ParamKind::Int { min: 1 }, ParamValue::Int(8)),
        ];
        v.extend(shared_params(true));
        v
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        non_sensitivity(
            ctx.model,
            ctx.x,
            ctx.class,
            ctx.attribution,
            cfg.float("eps_attr"),
            cfg.float("eps_out"),
            cfg.usize("n_probe"),
            &cfg.baseline("perturb_baseline")?,
            rng,
        )
        .map(SampleScore::scalar)
    }
}

pub struct InputInvariance;

impl Metric for InputInvariance {
    fn name(&self) -> &'static str {
        "input_invariance"
    }
    fn category(&self) -> Category {
        Category::Axiomatic
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![ParamSpec::new(
            "shift",
            ParamKind::Float { min: f64::MIN },
            ParamValue::Float(0.5),
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
        let shift = vec![cfg.float("shift"); ctx.x.len()];
        let post = |a: &[f64]| prepare_attribution(a, cfg);
        let c = input_invariance(ctx.model, ctx.x, ctx.class, &shift, explainer, &post, rng)?;
        Ok(SampleScore::check(c.max_abs_diff, c.pass))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::Method;
    use crate::model::{Dense, Layer, OutputHead};

    fn linear(w: Vec<f64>) -> Model {
        let d = w.len();
        Model::new(
            vec![d],
            vec![Layer::Dense(Dense {
                in_dim: d,
                out_dim: 1,
                weights: w,
                bias: vec![0.2],
            })],
            1,
            OutputHead::Logits,
        )
        .unwrap()
    }

    fn mlp(rng: &mut Rng) -> Model {
        crate::model::Model::init(
            vec![4],
            &[
                crate::model::LayerSpec::Dense { out: 6 },
                crate::model::LayerSpec::Relu,
                crate::model::LayerSpec::Dense { out: 2 },
            ],
            OutputHead::Logits,
            rng,
        )
        .unwrap()
    }

    #[test]
    fn linear_ig_is_complete() {
        let m = linear(vec![0.4, -1.1, 2.5]);
        let x = [0.3, 0.9, 0.5];
        let mut rng = Rng::from_seed(0);
        let a = explain_sample(&m, &x, 0, &ExplainerConfig::new(Method::IntegratedGradients), &mut rng).unwrap();
        let c = completeness(&m, &x, 0, &a, &BaselineSpec::Black, 1e-3, 1e-6, &mut rng).unwrap();
        assert!(c.gap <= 1e-9 && c.pass);
        let doubled: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let c2 = completeness(&m, &x, 0, &doubled, &BaselineSpec::Black, 1e-3, 1e-6, &mut rng).unwrap();
        let total: f64 = a.iter().sum();
        assert!((c2.gap - total.abs()).abs() <= 1e-9);
        assert!(!c2.pass);
    }

    #[test]
    fn ignored_feature_consistency() {
        // the model ignores feature 2
        let m = linear(vec![0.4, -1.1, 0.0]);
        let x = [0.3, 0.9, 0.5];
        let mut rng = Rng::from_seed(0);
        let good = [0.12, -0.99, 0.0];
        assert_eq!(
            non_sensitivity(&m, &x, 0, &good, 1e-6, 1e-4, 8, &BaselineSpec::Black, &mut rng).unwrap(),
            0.0
        );
        let bad = [0.12, -0.99, 0.9];
        assert!(non_sensitivity(&m, &x, 0, &bad, 1e-6, 1e-4, 8, &BaselineSpec::Black, &mut rng).unwrap() >= 1.0);
        let zeros = [0.0; 3];
        assert!(non_sensitivity(&m, &x, 0, &zeros, 1e-6, 1e-4, 8, &BaselineSpec::Black, &mut rng).unwrap() >= 1.0);
    }

    #[test]
    fn saliency_is_input_invariant_gradient_x_input_is_not() {
        let mut rng = Rng::from_seed(3);
        let m = mlp(&mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
        let shift: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let id = |a: &[f64]| Ok(a.to_vec());
        let sal = input_invariance(&m, &x, 0, &shift, &ExplainerConfig::new(Method::Saliency), &id, &mut rng).unwrap();
        assert!(sal.pass, "{sal:?}");
        let gxi = input_invariance(&m, &x, 0, &shift, &ExplainerConfig::new(Method::GradientXInput), &id, &mut rng)
            .unwrap();
        assert!(!gxi.pass);
        let zero = vec![0.0; 4];
        for method in crate::explain::Method::ALL {
            let c = input_invariance(&m, &x, 1, &zero, &ExplainerConfig::new(method), &id, &mut rng).unwrap();
            assert!(c.pass, "{method}");
        }
    }
}
