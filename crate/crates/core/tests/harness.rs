use xaieval_core::fixture::Fixture;
use xaieval_core::harness::{
    evaluate_with_threads, rank, sensitivity_sweep, Dataset, EvaluationPlan, ExplainerSpec, MetricSpec,
};
use xaieval_core::io::{report_body_string, report_from_str, report_to_string};
use xaieval_core::metrics::{Registry, SampleOutcome};
use xaieval_core::Method;

fn plan(registry: &Registry) -> EvaluationPlan {
    EvaluationPlan::new(17)
        .explainer(ExplainerSpec::method(Method::Saliency))
        .explainer(ExplainerSpec::method(Method::GradientShap))
        .explainer(ExplainerSpec::method(Method::Random))
        .all_metrics(registry)
}

fn fixture_data(n: usize) -> (Fixture, Dataset) {
    let fx = Fixture::build(3).unwrap();
    let data = fx.test.head(n).dataset();
    (fx, data)
}

#[test]
fn thread_count_does_not_change_the_report() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(24);
    let p = plan(&reg);
    let one = evaluate_with_threads(&p, &reg, &fx.model, &data, Some(1)).unwrap();
    let eight = evaluate_with_threads(&p, &reg, &fx.model, &data, Some(8)).unwrap();
    assert_eq!(report_body_string(&one).unwrap(), report_body_string(&eight).unwrap());
}

#[test]
fn sample_order_permutes_scores() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(16);
    let p = plan(&reg);
    let perm: Vec<usize> = (0..16).rev().collect();
    let mut masks = Vec::new();
    let per = data.inputs.sample_shape().iter().product::<usize>();
    let src = data.masks.as_ref().unwrap();
    for &i in &perm {
        masks.extend_from_slice(&src[i * per..(i + 1) * per]);
    }
    let shuffled = Dataset::new(data.inputs.select(&perm).unwrap(), perm.iter().map(|&i| data.labels[i]).collect())
        .unwrap()
        .with_masks(masks)
        .unwrap();
    let a = evaluate_with_threads(&p, &reg, &fx.model, &data, Some(1)).unwrap();
    let b = evaluate_with_threads(&p, &reg, &fx.model, &shuffled, Some(1)).unwrap();
    for (ra, rb) in a.results.iter().zip(&b.results) {
        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(ra.per_sample[i], rb.per_sample[j], "{}/{}", ra.metric, ra.explainer);
        }
        if let (Some(x), Some(y)) = (ra.aggregate.mean, rb.aggregate.mean) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn effective_config_replays_scores() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(12);
    let report = evaluate_with_threads(&plan(&reg), &reg, &fx.model, &data, Some(1)).unwrap();
    let text = report_to_string(&report).unwrap();
    let parsed = report_from_str(&text).unwrap();
    let mut replay = parsed.meta.plan.clone();
    replay.metrics = parsed
        .results
        .iter()
        .filter(|r| r.explainer == "saliency")
        .map(|r| MetricSpec { name: r.metric.clone(), params: r.effective_config.clone() })
        .collect();
    let again = evaluate_with_threads(&replay, &reg, &fx.model, &data, Some(1)).unwrap();
    assert_eq!(again.results.len(), report.results.len());
    for (r, s) in report.results.iter().zip(&again.results) {
        assert_eq!(r.per_sample, s.per_sample, "{}/{}", r.metric, r.explainer);
    }
}

#[test]
fn ranking_scores_are_normalised() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(12);
    let report = evaluate_with_threads(&plan(&reg), &reg, &fx.model, &data, Some(1)).unwrap();
    let table = rank(&report.results).unwrap();
    let n = table.explainers.len() as f64;
    for m in &table.metrics {
        assert!(m.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        let rank_sum: f64 = m.ranks.iter().sum();
        assert!((rank_sum - n * (n + 1.0) / 2.0).abs() < 1e-12, "{}", m.metric);
        assert!((m.scores.iter().sum::<f64>() - n / 2.0).abs() < 1e-12, "{}", m.metric);
    }
    assert_eq!(table.categories.len(), 6 * 3);
}

#[test]
fn repeated_sweep_value_is_a_fixed_point() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(10);
    let p = EvaluationPlan::new(5)
        .explainer(ExplainerSpec::method(Method::Saliency))
        .explainer(ExplainerSpec::method(Method::GradientXInput))
        .explainer(ExplainerSpec::method(Method::Random))
        .metric(MetricSpec::new("perturbation_curve"))
        .metric(MetricSpec::new("sparseness"));
    let values = vec!["uniform_noise".to_string(), "uniform_noise".to_string()];
    let sweep = sensitivity_sweep(&p, &reg, &fx.model, &data, "metrics.perturbation_curve.perturb_baseline", &values, Some(1)).unwrap();
    assert_eq!(sweep.tau, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    assert_eq!(
        report_body_string(&sweep.reports[0]).unwrap(),
        report_body_string(&sweep.reports[1]).unwrap()
    );
}

#[test]
fn failures_keep_batch_alignment() {
    let reg = Registry::default();
    let (fx, data) = fixture_data(8);
    let zero = xaieval_core::Tensor::zeros(data.inputs.shape().to_vec()).unwrap();
    let data = data.with_attributions("zeros", zero).unwrap();
    let p = EvaluationPlan::new(0)
        .explainer(ExplainerSpec::precomputed("zeros", None))
        .metric(MetricSpec::new("sparseness"));
    let report = evaluate_with_threads(&p, &reg, &fx.model, &data, Some(1)).unwrap();
    let cell = report.result("sparseness", "zeros").unwrap();
    assert_eq!(cell.per_sample.len(), 8);
    assert!(cell.per_sample.iter().all(|o| matches!(o, SampleOutcome::Failed { .. })));
    assert!(cell.all_failed_numerically());
}
