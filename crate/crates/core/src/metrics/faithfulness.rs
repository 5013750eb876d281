//! Faithfulness: do high-attribution features actually drive the output?

use super::{
    shared_params, Category, Direction, Metric, MetricConfig, ParamKind, ParamSpec, ParamValue,
    SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::perturb::{patch_indices, replace_features, BaselineSpec};
use crate::rng::Rng;
use crate::stats;

/// Replacement value for every feature, drawn once per sample so that
/// cumulative perturbations stay consistent across steps.
fn baseline_values(x: &[f64], baseline: &BaselineSpec, rng: &mut Rng) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..x.len()).collect();
    replace_features(x, &all, baseline, rng)
}

fn class_score(model: &dyn Classifier, x: &[f64], class: usize) -> f64 {
    model.scores(x)[class]
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub features_in_step: usize,
    pub patch_size: usize,
    pub baseline: BaselineSpec,
    /// `None` perturbs until every feature is replaced.
    pub max_steps: Option<usize>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            features_in_step: 28,
            patch_size: 1,
            baseline: BaselineSpec::Black,
            max_steps: None,
        }
    }
}

fn check_attribution(x: &[f64], a: &[f64]) -> Result<()> {
    if x.len() != a.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![x.len()],
            got: vec![a.len()],
        });
    }
    Ok(())
}

fn curve_auc(curve: &[f64]) -> Result<f64> {
    if curve.len() == 1 {
        Ok(curve[0])
    } else {
        stats::auc_trapezoid(curve)
    }
}

/// Most-relevant-first deletion curve.
///
/// `curve[0]` is the unperturbed class score; each following point replaces
/// the next group from [`patch_indices`] with the baseline. Returns the curve
/// and its trapezoidal area (lower is better).
pub fn perturbation_curve(
    model: &dyn Classifier,
    x: &[f64],
    shape: &[usize],
    class: usize,
    a: &[f64],
    opts: &CurveOptions,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    check_attribution(x, a)?;
    let groups = patch_indices(shape, a, opts.features_in_step, opts.patch_size)?;
    let replacement = baseline_values(x, &opts.baseline, rng)?;
    let steps = opts.max_steps.unwrap_or(groups.len()).min(groups.len());
    let mut current = x.to_vec();
    let mut curve = Vec::with_capacity(steps + 1);
    curve.push(class_score(model, &current, class));
    for group in &groups[..steps] {
        for &i in group {
            current[i] = replacement[i];
        }
        curve.push(class_score(model, &current, class));
    }
    let auc = curve_auc(&curve)?;
    Ok((curve, auc))
}

/// Most-relevant-first insertion curve, starting from the fully replaced
/// input and restoring groups in descending attribution order. Higher area is
/// better.
pub fn insertion_curve(
    model: &dyn Classifier,
    x: &[f64],
    shape: &[usize],
    class: usize,
    a: &[f64],
    opts: &CurveOptions,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    check_attribution(x, a)?;
    let groups = patch_indices(shape, a, opts.features_in_step, opts.patch_size)?;
    let mut current = baseline_values(x, &opts.baseline, rng)?;
    let steps = opts.max_steps.unwrap_or(groups.len()).min(groups.len());
    let mut curve = Vec::with_capacity(steps + 1);
    curve.push(class_score(model, &current, class));
    for group in &groups[..steps] {
        for &i in group {
            current[i] = x[i];
        }
        curve.push(class_score(model, &current, class));
    }
    let auc = curve_auc(&curve)?;
    Ok((curve, auc))
}

/// Pearson correlation between output drops and attribution mass over
/// random feature subsets.
pub fn faithfulness_correlation(
    model: &dyn Classifier,
    x: &[f64],
    class: usize,
    a: &[f64],
    subset_size: usize,
    n_runs: usize,
    baseline: &BaselineSpec,
    rng: &mut Rng,
) -> Result<f64> {
    check_attribution(x, a)?;
    if subset_size == 0 || subset_size >= x.len() {
        return Err(Error::InvalidParameter(format!(
            "subset_size must be in 1..{}, got {subset_size}",
            x.len()
        )));
    }
    let reference = class_score(model, x, class);
    let mut deltas = Vec::with_capacity(n_runs);
    let mut sums = Vec::with_capacity(n_runs);
    for _ in 0..n_runs {
        let subset = rng.sample_indices(x.len(), subset_size);
        let perturbed = replace_features(x, &subset, baseline, rng)?;
        deltas.push(reference - class_score(model, &perturbed, class));
        sums.push(subset.iter().map(|&i| a[i]).sum());
    }
    stats::pearson(&deltas, &sums)
}

/// Spearman correlation between group attribution sums and the output gain
/// obtained by re-inserting each group into a fully replaced input.
pub fn monotonicity(
    model: &dyn Classifier,
    x: &[f64],
    shape: &[usize],
    class: usize,
    a: &[f64],
    features_in_step: usize,
    baseline: &BaselineSpec,
    rng: &mut Rng,
) -> Result<f64> {
    check_attribution(x, a)?;
    let groups = patch_indices(shape, a, features_in_step, 1)?;
    if groups.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: groups.len(),
        });
    }
    let mut current = baseline_values(x, baseline, rng)?;
    let mut previous = class_score(model, &current, class);
    let mut gains = Vec::with_capacity(groups.len());
    let mut sums = Vec::with_capacity(groups.len());
    for group in &groups {
        for &i in group {
            current[i] = x[i];
        }
        let now = class_score(model, &current, class);
        gains.push(now - previous);
        previous = now;
        sums.push(group.iter().map(|&i| a[i]).sum());
    }
    stats::spearman(&sums, &gains)
}

fn curve_options(cfg: &MetricConfig) -> Result<CurveOptions> {
    let max_steps = cfg.int("max_steps");
    Ok(CurveOptions {
        features_in_step: cfg.usize("features_in_step"),
        patch_size: cfg.usize("patch_size"),
        baseline: cfg.baseline("perturb_baseline")?,
        max_steps: (max_steps >= 0).then_some(max_steps as usize),
    })
}

fn curve_params(features_in_step: i64, patch_size: i64, sensitive_patch: bool) -> Vec<ParamSpec> {
    let mut fis = ParamSpec::new(
        "features_in_step",
        ParamKind::Int { min: 1 },
        ParamValue::Int(features_in_step),
    );
    let mut patch = ParamSpec::new("patch_size", ParamKind::Int { min: 1 }, ParamValue::Int(patch_size));
    if sensitive_patch {
        patch = patch.sensitive();
    } else {
        fis = fis.sensitive();
    }
    let mut v = vec![
        fis,
        patch,
        // -1 perturbs every group
        ParamSpec::new("max_steps", ParamKind::Int { min: -1 }, ParamValue::Int(-1)),
    ];
    v.extend(shared_params(true));
    v
}

/// Pixel flipping: deletion curve over ranked single features.
pub struct PerturbationCurve;

impl Metric for PerturbationCurve {
    fn name(&self) -> &'static str {
        "perturbation_curve"
    }
    fn category(&self) -> Category {
        Category::Faithfulness
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        curve_params(28, 1, false)
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let (curve, auc) = perturbation_curve(
            ctx.model,
            ctx.x,
            ctx.shape,
            ctx.class,
            ctx.attribution,
            &curve_options(cfg)?,
            rng,
        )?;
        Ok(SampleScore::curve(auc, curve))
    }
}

/// Region perturbation: deletion curve over square patches.
pub struct RegionPerturbation;

impl Metric for RegionPerturbation {
    fn name(&self) -> &'static str {
        "region_perturbation"
    }
    fn category(&self) -> Category {
        Category::Faithfulness
    }
    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        curve_params(1, 2, true)
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        PerturbationCurve.score(ctx, cfg, rng)
    }
}

pub struct InsertionCurve;

impl Metric for InsertionCurve {
    fn name(&self) -> &'static str {
        "insertion_curve"
    }
    fn category(&self) -> Category {
        Category::Faithfulness
    }
    fn direction(&self) -> Direction {
        Direction::HigherBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        curve_params(28, 1, false)
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        let (curve, auc) = insertion_curve(
            ctx.model,
            ctx.x,
            ctx.shape,
            ctx.class,
            ctx.attribution,
            &curve_options(cfg)?,
            rng,
        )?;
        Ok(SampleScore::curve(auc, curve))
    }
}

pub struct FaithfulnessCorrelation;

impl Metric for FaithfulnessCorrelation {
    fn name(&self) -> &'static str {
        "faithfulness_correlation"
    }
    fn category(&self) -> Category {
        Category::Faithfulness
    }
    fn direction(&self) -> Direction {
        Direction::HigherBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![
            ParamSpec::new("subset_size", ParamKind::Int { min: 1 }, ParamValue::Int(8)).sensitive(),
            ParamSpec::new("n_runs", ParamKind::Int { min: 2 }, ParamValue::Int(100)),
        ];
        v.extend(shared_params(true));
        v
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        faithfulness_correlation(
            ctx.model,
            ctx.x,
            ctx.class,
            ctx.attribution,
            cfg.usize("subset_size"),
            cfg.usize("n_runs"),
            &cfg.baseline("perturb_baseline")?,
            rng,
        )
        .map(SampleScore::scalar)
    }
}

pub struct Monotonicity;

impl Metric for Monotonicity {
    fn name(&self) -> &'static str {
        "monotonicity"
    }
    fn category(&self) -> Category {
        Category::Faithfulness
    }
    fn direction(&self) -> Direction {
        Direction::HigherBetter
    }
    fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![ParamSpec::new(
            "features_in_step",
            ParamKind::Int { min: 1 },
            ParamValue::Int(1),
        )
        .sensitive()];
        v.extend(shared_params(true));
        v
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore> {
        monotonicity(
            ctx.model,
            ctx.x,
            ctx.shape,
            ctx.class,
            ctx.attribution,
            cfg.usize("features_in_step"),
            &cfg.baseline("perturb_baseline")?,
            rng,
        )
        .map(SampleScore::scalar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dense, Layer, Model, OutputHead};

    fn linear(w: Vec<f64>, bias: f64) -> Model {
        let d = w.len();
        Model::new(
            vec![d],
            vec![Layer::Dense(Dense {
                in_dim: d,
                out_dim: 1,
                weights: w,
                bias: vec![bias],
            })],
            1,
            OutputHead::Logits,
        )
        .unwrap()
    }

    fn step1() -> CurveOptions {
        CurveOptions {
            features_in_step: 1,
            ..Default::default()
        }
    }

    #[test]
    fn single_feature_model_curve() {
        let m = linear(vec![1.0, 0.0], 0.0);
        let (curve, auc) =
            perturbation_curve(&m, &[1.0, 1.0], &[2], 0, &[1.0, 0.0], &step1(), &mut Rng::from_seed(0))
                .unwrap();
        assert_eq!(curve, vec![1.0, 0.0, 0.0]);
        assert!((auc - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_model_flat_curve() {
        let m = linear(vec![0.0; 4], 0.7);
        let (curve, auc) = perturbation_curve(
            &m,
            &[0.1, 0.2, 0.3, 0.4],
            &[4],
            0,
            &[0.4, 0.3, 0.2, 0.1],
            &step1(),
            &mut Rng::from_seed(0),
        )
        .unwrap();
        assert!(curve.iter().all(|&v| v == 0.7));
        assert!((auc - 0.7).abs() < 1e-15);
    }

    #[test]
    fn affine_attribution_transform_keeps_curve() {
        let m = linear(vec![0.3, -0.2, 0.9, 0.4], 0.1);
        let x = [0.5, 0.6, 0.7, 0.8];
        let a = [0.2, -0.5, 0.9, 0.1];
        let a2: Vec<f64> = a.iter().map(|v| 2.0 * v + 5.0).collect();
        let c1 = perturbation_curve(&m, &x, &[4], 0, &a, &step1(), &mut Rng::from_seed(0)).unwrap();
        let c2 = perturbation_curve(&m, &x, &[4], 0, &a2, &step1(), &mut Rng::from_seed(0)).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn zero_steps_returns_reference() {
        let m = linear(vec![1.0, 2.0], 0.5);
        let opts = CurveOptions {
            max_steps: Some(0),
            ..step1()
        };
        let (curve, auc) =
            perturbation_curve(&m, &[1.0, 1.0], &[2], 0, &[1.0, 0.0], &opts, &mut Rng::from_seed(0)).unwrap();
        assert_eq!(curve, vec![3.5]);
        assert_eq!(auc, 3.5);
    }

    #[test]
    fn correlation_exact_for_linear_gradient_x_input() {
        let w = vec![0.3, -0.2, 0.9, 0.4, 1.5, -0.7];
        let m = linear(w.clone(), 0.2);
        let x = [0.5, 0.6, 0.7, 0.8, 0.1, 0.3];
        let a: Vec<f64> = w.iter().zip(&x).map(|(w, x)| w * x).collect();
        let r = faithfulness_correlation(&m, &x, 0, &a, 2, 50, &BaselineSpec::Black, &mut Rng::from_seed(1))
            .unwrap();
        assert!((r - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn correlation_is_reproducible() {
        let m = linear(vec![0.3, -0.2, 0.9, 0.4], 0.0);
        let x = [0.5, 0.6, 0.7, 0.8];
        let a = [0.1, 0.4, 0.2, 0.3];
        let run = || {
            faithfulness_correlation(&m, &x, 0, &a, 2, 2, &BaselineSpec::Black, &mut Rng::from_seed(5))
        };
        match (run(), run()) {
            (Ok(p), Ok(q)) => assert_eq!(p.to_bits(), q.to_bits()),
            (Err(p), Err(q)) => assert_eq!(p.code(), q.code()),
            _ => panic!("non-deterministic outcome"),
        }
    }

    #[test]
    fn correlation_rejects_full_subset() {
        let m = linear(vec![1.0, 1.0], 0.0);
        assert!(faithfulness_correlation(&m, &[1.0, 1.0], 0, &[1.0, 1.0], 2, 10, &BaselineSpec::Black, &mut Rng::from_seed(0)).is_err());
    }

    #[test]
    fn monotonicity_cases() {
        let w = vec![0.3, 0.2, 0.9, 0.4, 1.5];
        let m = linear(w.clone(), 0.0);
        let x = [0.5, 0.6, 0.7, 0.8, 0.2];
        let a: Vec<f64> = w.iter().zip(&x).map(|(w, x)| w * x).collect();
        let mut rng = Rng::from_seed(0);
        let s = monotonicity(&m, &x, &[5], 0, &a, 1, &BaselineSpec::Black, &mut rng).unwrap();
        assert!((s - 1.0).abs() <= 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let s2 = monotonicity(&m, &x, &[5], 0, &neg, 1, &BaselineSpec::Black, &mut rng).unwrap();
        assert!((s2 + s).abs() <= 1e-12, "{s} {s2}");
        let flat = linear(vec![0.0; 5], 1.0);
        assert!(matches!(
            monotonicity(&flat, &x, &[5], 0, &a, 1, &BaselineSpec::Black, &mut rng),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn insertion_ends_at_reference() {
        let m = linear(vec![0.3, 0.2, 0.9], 0.1);
        let x = [0.5, 0.6, 0.7];
        let (curve, _) =
            insertion_curve(&m, &x, &[3], 0, &[0.1, 0.2, 0.3], &step1(), &mut Rng::from_seed(0)).unwrap();
        assert_eq!(curve.len(), 4);
        assert!((curve[0] - 0.1).abs() < 1e-15);
        assert!((curve[3] - m.scores(&x)[0]).abs() < 1e-15);
    }
}
