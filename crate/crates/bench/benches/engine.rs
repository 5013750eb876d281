use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use xaieval_core::fixture::Fixture;
use xaieval_core::harness::{evaluate_with_threads, EvaluationPlan, ExplainerSpec};
use xaieval_core::metrics::faithfulness::{perturbation_curve, CurveOptions};
use xaieval_core::metrics::Registry;
use xaieval_core::{explain_sample, Classifier, ExplainerConfig, Method, Rng};

fn explainers(c: &mut Criterion) {
    let fx = Fixture::build(0).unwrap();
    let x = fx.test.inputs.sample_data(0);
    let class = fx.test.labels[0];
    let mut group = c.benchmark_group("explain");
    for method in [Method::Saliency, Method::IntegratedGradients, Method::GradientShap] {
        let cfg = ExplainerConfig::new(method);
        group.bench_function(method.name(), |b| {
            b.iter(|| explain_sample(&fx.model, black_box(x), class, &cfg, &mut Rng::from_seed(0)).unwrap())
        });
    }
    group.finish();
}

fn deletion_curve(c: &mut Criterion) {
    let fx = Fixture::build(0).unwrap();
    let x = fx.test.inputs.sample_data(0);
    let class = fx.test.labels[0];
    let a = fx.model.logit_gradient(x, class).unwrap();
    let shape = fx.model.input_shape().to_vec();
    let opts = CurveOptions { features_in_step: 1, ..CurveOptions::default() };
    c.bench_function("perturbation_curve/64_steps", |b| {
        b.iter(|| perturbation_curve(&fx.model, black_box(x), &shape, class, &a, &opts, &mut Rng::from_seed(0)).unwrap())
    });
}

fn full_evaluation(c: &mut Criterion) {
    let fx = Fixture::build(0).unwrap();
    let data = fx.test.head(20).dataset();
    let registry = Registry::default();
    let plan = EvaluationPlan::new(0)
        .explainer(ExplainerSpec::method(Method::Saliency))
        .explainer(ExplainerSpec::method(Method::Random))
        .all_metrics(&registry);
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    group.bench_function("20_samples_all_metrics", |b| {
        b.iter(|| evaluate_with_threads(&plan, &registry, &fx.model, &data, Some(1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, explainers, deletion_curve, full_evaluation);
criterion_main!(benches);
