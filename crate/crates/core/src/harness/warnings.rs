use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::EvaluationPlan;
use crate::explain::Method;
use crate::metrics::{Category, Registry};
use crate::model::{Classifier, Model};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Caution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub severity: Severity,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explainer: Option<String>,
}

impl Warning {
    pub fn caution(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            severity: Severity::Caution,
            message: message.into(),
            metric: None,
            explainer: None,
        }
    }

    pub fn info(code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Info,
            ..Self::caution(code, message)
        }
    }

    pub fn for_metric(mut self, metric: &str) -> Self {
        self.metric = Some(metric.into());
        self
    }

    pub fn for_explainer(mut self, explainer: &str) -> Self {
        self.explainer = Some(explainer.into());
        self
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Caution => "caution",
        };
        write!(f, "{sev}[{}]", self.code)?;
        if let Some(m) = &self.metric {
            write!(f, " metric={m}")?;
        }
        if let Some(e) = &self.explainer {
            write!(f, " explainer={e}")?;
        }
        write!(f, ": {}", self.message)
    }
}

const RANGE_SLACK: f64 = 0.01;

/// Cautions and notes about a plan. Never fails: unknown metrics are skipped
/// here and reported by validation instead.
pub fn check_plan(plan: &EvaluationPlan, registry: &Registry, model: &Model, inputs: &Tensor) -> Vec<Warning> {
    let mut out = Vec::new();

    if !inputs.is_empty() {
        let (lo, hi) = (inputs.min(), inputs.max());
        if lo < -RANGE_SLACK || hi > 1.0 + RANGE_SLACK {
            out.push(Warning::caution(
                "data_range",
                format!(
                    "inputs span [{lo:.4}, {hi:.4}] but baselines assume [0, 1] (black = 0, white = 1); \
                     black may not mean absent for this data"
                ),
            ));
        }
    }
    if model.input_shape() != inputs.sample_shape() {
        out.push(Warning::caution(
            "input_shape",
            format!(
                "model expects samples of shape {:?}, inputs have {:?}",
                model.input_shape(),
                inputs.sample_shape()
            ),
        ));
    }

    for spec in &plan.metrics {
        let Some(metric) = registry.get(&spec.name) else { continue };
        let Ok(cfg) = spec.resolve(registry) else { continue };

        let defaults = cfg.sensitive_defaults();
        if !defaults.is_empty() {
            out.push(
                Warning::caution(
                    "default_hyperparameters",
                    format!(
                        "scores are known to depend on {} which {} left at the default; \
                         consider a sensitivity sweep",
                        defaults.join(", "),
                        if defaults.len() == 1 { "is" } else { "are" }
                    ),
                )
                .for_metric(&spec.name),
            );
        }
        if spec.name == "completeness" && cfg.bool("normalise") {
            out.push(
                Warning::caution(
                    "completeness_normalise",
                    "normalise=true rescales attributions, so their sum no longer matches the output difference",
                )
                .for_metric(&spec.name),
            );
        }
        if spec.name == "completeness" && cfg.bool("abs") {
            out.push(
                Warning::caution(
                    "completeness_abs",
                    "abs=true discards signs, so attributions cannot sum to the output difference",
                )
                .for_metric(&spec.name),
            );
        }
        if metric.requirements().explainer {
            for e in plan.explainers.iter().filter(|e| e.method.is_none()) {
                out.push(
                    Warning::caution(
                        "fixed_attributions",
                        "metric re-runs the explanation method; fixed attributions will yield failed samples",
                    )
                    .for_metric(&spec.name)
                    .for_explainer(&e.name),
                );
            }
        }
        if metric.category() == Category::Axiomatic && spec.name != "input_invariance" {
            for e in &plan.explainers {
                if e.method == Some(Method::IntegratedGradients) && e.ig_steps < 256 {
                    out.push(
                        Warning::info(
                            "ig_steps",
                            format!(
                                "integrated gradients with {} steps; completeness gaps shrink with more steps",
                                e.ig_steps
                            ),
                        )
                        .for_metric(&spec.name)
                        .for_explainer(&e.name),
                    );
                }
            }
        }
        out.push(
            Warning::info(
                "direction",
                format!("{} ({})", metric.direction(), metric.category()),
            )
            .for_metric(&spec.name),
        );
    }

    for e in &plan.explainers {
        if e.method == Some(Method::GradientShap) {
            out.push(
                Warning::info(
                    "gradient_shap_scale",
                    format!(
                        "reference noise sigma {} is absolute; rescale it with the data",
                        e.shap_noise_sigma
                    ),
                )
                .for_explainer(&e.name),
            );
        }
    }
    out
}
