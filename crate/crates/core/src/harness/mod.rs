//! Evaluation orchestration: run every (explainer, metric) pair over a
//! dataset, rank explainers per category, sweep hyperparameters and warn
//! about fragile settings.
//!
//! Every random stream is derived from the plan's master seed and a context
//! string built from the metric name, the explainer name and the content of
//! the sample. Results therefore do not depend on thread scheduling, sample
//! order or on which other metrics run alongside, and sweeps over one
//! hyperparameter reuse the same draws for every value.

mod plan;
mod ranking;
mod sweep;
mod warnings;

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use plan::{DataRefs, EvaluationPlan, ExplainerSpec, MetricSpec};
pub use ranking::{direction_ranks, rank, CategoryScore, MetricRanking, RankingTable};
pub use sweep::{plan_with, sensitivity_sweep, SweepResult};
pub use warnings::{check_plan, Severity, Warning};

use crate::error::{Error, Result};
use crate::explain::{explain_sample, ExplainerConfig};
use crate::metrics::{
    prepare_attribution, Aggregate, Category, Direction, Metric, MetricConfig, ParamValue, Registry,
    SampleContext, SampleOutcome,
};
use crate::model::{Classifier, Model};
use crate::rng::{sample_key, Rng};
use crate::tensor::Tensor;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "XAIEVAL_THREADS";

/// Inputs, labels and optional masks and fixed attributions.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    /// Flattened ground-truth masks, same layout as `inputs`.
    pub masks: Option<Vec<bool>>,
    /// Fixed attributions keyed by explainer name.
    pub attributions: BTreeMap<String, Tensor>,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>) -> Result<Self> {
        if inputs.shape().len() < 2 {
            return Err(Error::ShapeMismatch {
                expected: vec![labels.len(), 0],
                got: inputs.shape().to_vec(),
            });
        }
        if inputs.batch_size() != labels.len() {
            return Err(Error::LengthMismatch {
                left: inputs.batch_size(),
                right: labels.len(),
            });
        }
        Ok(Self {
            inputs,
            labels,
            masks: None,
            attributions: BTreeMap::new(),
        })
    }

    pub fn with_masks(mut self, masks: Vec<bool>) -> Result<Self> {
        if masks.len() != self.inputs.len() {
            return Err(Error::LengthMismatch {
                left: self.inputs.len(),
                right: masks.len(),
            });
        }
        self.masks = Some(masks);
        Ok(self)
    }

    pub fn with_attributions(mut self, explainer: impl Into<String>, a: Tensor) -> Result<Self> {
        if a.shape() != self.inputs.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.inputs.shape().to_vec(),
                got: a.shape().to_vec(),
            });
        }
        self.attributions.insert(explainer.into(), a);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Scores of one metric for one explainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: String,
    pub explainer: String,
    pub category: Category,
    pub direction: Direction,
    pub per_sample: Vec<SampleOutcome>,
    pub aggregate: Aggregate,
    pub effective_config: BTreeMap<String, ParamValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MetricResult {
    /// True when samples exist and every one failed with a numerical error.
    pub fn all_failed_numerically(&self) -> bool {
        !self.per_sample.is_empty()
            && self.per_sample.iter().all(|o| match o {
                SampleOutcome::Failed { error, .. } => is_numerical_code(error),
                SampleOutcome::Score(_) => false,
            })
    }
}

fn is_numerical_code(code: &str) -> bool {
    matches!(
        code,
        "DegenerateVariance" | "AllZero" | "AllZeroAttribution" | "NoPositiveAttribution" | "ZeroNormExplanation" | "SingleClass"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool_version: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub n_samples: usize,
    pub plan: EvaluationPlan,
}

/// Wall-clock seconds spent per explainer and per metric.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub explainers: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meta: ReportMeta,
    pub results: Vec<MetricResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rankings: Option<RankingTable>,
    pub warnings: Vec<Warning>,
    pub timing: Timing,
}

impl EvaluationReport {
    /// The report with run-dependent fields (timestamp and timings) cleared,
    /// for comparing runs.
    pub fn body(&self) -> EvaluationReport {
        let mut b = self.clone();
        b.meta.timestamp = 0;
        b.timing = Timing::default();
        b
    }

    pub fn result(&self, metric: &str, explainer: &str) -> Option<&MetricResult> {
        self.results
            .iter()
            .find(|r| r.metric == metric && r.explainer == explainer)
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV} must be a positive integer, got \"{v}\""
            ))),
        },
    }
}

enum Exec {
    Sequential,
    Pool(rayon::ThreadPool),
}

impl Exec {
    fn new(threads: Option<usize>) -> Result<Self> {
        let n = threads.unwrap_or_else(rayon::current_num_threads);
        if n <= 1 {
            return Ok(Exec::Sequential);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Exec::Pool)
            .map_err(|e| Error::InvalidParameter(format!("cannot start {n} worker threads: {e}")))
    }

    /// `f(0..n)` assembled in index order.
    fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}

struct Resolved {
    metrics: Vec<(std::sync::Arc<dyn Metric>, MetricConfig)>,
    explainers: Vec<(String, Option<ExplainerConfig>)>,
}

fn resolve(plan: &EvaluationPlan, registry: &Registry, model: &Model, data: &Dataset) -> Result<Resolved> {
    plan.validate(registry)?;
    if data.inputs.sample_shape() != model.input_shape() {
        let mut expected = vec![data.len()];
        expected.extend_from_slice(model.input_shape());
        return Err(Error::ShapeMismatch {
            expected,
            got: data.inputs.shape().to_vec(),
        });
    }
    if let Some(&class) = data.labels.iter().find(|&&c| c >= model.num_classes()) {
        return Err(Error::InvalidClass {
            class,
            num_classes: model.num_classes(),
        });
    }
    let mut metrics = Vec::with_capacity(plan.metrics.len());
    let mut need_masks = Vec::new();
    for spec in &plan.metrics {
        let metric = registry.lookup(&spec.name)?;
        if metric.requirements().masks {
            need_masks.push(spec.name.as_str());
        }
        metrics.push((metric, spec.resolve(registry)?));
    }
    if !need_masks.is_empty() && data.masks.is_none() {
        return Err(Error::PlanValidation(format!(
            "localisation metrics need ground-truth masks (--masks): {}",
            need_masks.join(", ")
        )));
    }
    let mut explainers = Vec::with_capacity(plan.explainers.len());
    for spec in &plan.explainers {
        let cfg = spec.config()?;
        if cfg.is_none() && !data.attributions.contains_key(&spec.name) {
            return Err(Error::PlanValidation(format!(
                "explainer `{}` has no method and no attributions were supplied",
                spec.name
            )));
        }
        explainers.push((spec.name.clone(), cfg));
    }
    Ok(Resolved { metrics, explainers })
}

fn failure_summary(outcomes: &[SampleOutcome]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for o in outcomes {
        if let SampleOutcome::Failed { error, .. } = o {
            *counts.entry(error).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return None;
    }
    let total: usize = counts.values().sum();
    let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k} x{v}")).collect();
    Some(format!(
        "{total} of {} samples failed: {}",
        outcomes.len(),
        parts.join(", ")
    ))
}

/// Evaluate with the worker count from [`THREADS_ENV`].
pub fn evaluate(plan: &EvaluationPlan, registry: &Registry, model: &Model, data: &Dataset) -> Result<EvaluationReport> {
    evaluate_with_threads(plan, registry, model, data, threads_from_env()?)
}

/// Run every (explainer, metric) pair. `threads = Some(1)` runs on the
/// calling thread; `None` uses one worker per core.
pub fn evaluate_with_threads(
    plan: &EvaluationPlan,
    registry: &Registry,
    model: &Model,
    data: &Dataset,
    threads: Option<usize>,
) -> Result<EvaluationReport> {
    let resolved = resolve(plan, registry, model, data)?;
    let exec = Exec::new(threads)?;
    let n = plan.sample_limit.map_or(data.len(), |l| l.min(data.len()));
    let seed = plan.master_seed;
    let keys: Vec<String> = (0..n)
        .map(|i| sample_key(data.inputs.sample_data(i), data.labels[i]))
        .collect();

    let mut timing = Timing::default();
    // explanation failures become the outcome of every metric on that sample
    let mut attributions: Vec<Vec<std::result::Result<Vec<f64>, SampleOutcome>>> = Vec::with_capacity(resolved.explainers.len());
    for (name, cfg) in &resolved.explainers {
        let start = Instant::now();
        let column = match cfg {
            Some(cfg) => exec.map(n, |i| {
                let mut rng = Rng::derive(seed, &format!("{}/{}", cfg.context, keys[i]));
                explain_sample(model, data.inputs.sample_data(i), data.labels[i], cfg, &mut rng)
                    .map_err(|e| SampleOutcome::from_result(Err(e)))
            }),
            None => {
                let a = &data.attributions[name];
                (0..n).map(|i| Ok(a.sample_data(i).to_vec())).collect()
            }
        };
        timing.explainers.insert(name.clone(), start.elapsed().as_secs_f64());
        attributions.push(column);
    }

    let shape = model.input_shape();
    let sample_len = model.input_len();
    let mut results = Vec::with_capacity(resolved.metrics.len() * resolved.explainers.len());
    for (metric, cfg) in &resolved.metrics {
        let start = Instant::now();
        let n_expl = resolved.explainers.len();
        let outcomes = exec.map(n_expl * n, |task| {
            let (e, i) = (task / n, task % n);
            let (expl_name, expl_cfg) = &resolved.explainers[e];
            let raw = match &attributions[e][i] {
                Ok(raw) => raw,
                Err(failed) => return failed.clone(),
            };
            let run = || -> Result<crate::metrics::SampleScore> {
                let prepared = prepare_attribution(raw, cfg)?;
                let ctx = SampleContext {
                    model,
                    x: data.inputs.sample_data(i),
                    shape,
                    class: data.labels[i],
                    attribution: &prepared,
                    mask: data.masks.as_ref().map(|m| &m[i * sample_len..(i + 1) * sample_len]),
                    explainer: expl_cfg.as_ref(),
                };
                let mut rng = Rng::derive(
                    seed,
                    &format!("metric:{}/explainer:{expl_name}/sample:{}", metric.name(), keys[i]),
                );
                metric.score(&ctx, cfg, &mut rng)
            };
            SampleOutcome::from_result(run())
        });
        timing
            .metrics
            .insert(metric.name().to_string(), start.elapsed().as_secs_f64());
        for (e, (expl_name, _)) in resolved.explainers.iter().enumerate() {
            let per_sample = outcomes[e * n..(e + 1) * n].to_vec();
            let warnings = failure_summary(&per_sample).into_iter().collect();
            results.push(MetricResult {
                metric: metric.name().to_string(),
                explainer: expl_name.clone(),
                category: metric.category(),
                direction: metric.direction(),
                aggregate: Aggregate::from_outcomes(&per_sample),
                per_sample,
                effective_config: cfg.values().clone(),
                warnings,
            });
        }
    }

    let mut warnings = check_plan(plan, registry, model, &data.inputs);
    let rankings = match rank(&results) {
        Ok(r) => Some(r),
        Err(Error::FewerThanTwoExplainers(k)) => {
            warnings.push(Warning::info(
                "ranking_skipped",
                format!("ranking needs at least two explainers, plan has {k}"),
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(EvaluationReport {
        meta: ReportMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: seed,
            timestamp,
            n_samples: n,
            plan: plan.clone(),
        },
        results,
        rankings,
        warnings,
        timing,
    })
}
