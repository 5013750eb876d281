use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{ExplainerConfig, Method};
use crate::metrics::{MetricConfig, ParamValue, Registry};

/// One named explanation source: either a method run by the engine or
/// attributions supplied from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerSpec {
    pub name: String,
    /// `None` means the attributions are supplied with the dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Where fixed attributions were loaded from, for the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributions: Option<String>,
    #[serde(default = "default_ig_steps")]
    pub ig_steps: usize,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default = "default_shap_samples")]
    pub shap_samples: usize,
    #[serde(default = "default_shap_sigma")]
    pub shap_noise_sigma: f64,
    #[serde(default)]
    pub abs: bool,
}

fn default_ig_steps() -> usize {
    64
}
fn default_baseline() -> String {
    "black".into()
}
fn default_shap_samples() -> usize {
    16
}
fn default_shap_sigma() -> f64 {
    0.1
}

pub(crate) const EXPLAINER_FIELDS: [&str; 5] = ["ig_steps", "baseline", "shap_samples", "shap_noise_sigma", "abs"];

impl ExplainerSpec {
    pub fn method(method: Method) -> Self {
        Self::named(method.name(), method)
    }

    pub fn named(name: impl Into<String>, method: Method) -> Self {
        Self {
            name: name.into(),
            method: Some(method),
            attributions: None,
            ig_steps: default_ig_steps(),
            baseline: default_baseline(),
            shap_samples: default_shap_samples(),
            shap_noise_sigma: default_shap_sigma(),
            abs: false,
        }
    }

    pub fn precomputed(name: impl Into<String>, source: Option<String>) -> Self {
        Self {
            method: None,
            attributions: source,
            ..Self::named(name, Method::Saliency)
        }
    }

    /// Runtime configuration, or `None` for fixed attributions.
    pub fn config(&self) -> Result<Option<ExplainerConfig>> {
        let Some(method) = self.method else {
            return Ok(None);
        };
        let cfg = ExplainerConfig {
            method,
            ig_steps: self.ig_steps,
            baseline: self.baseline.parse()?,
            shap_samples: self.shap_samples,
            shap_noise_sigma: self.shap_noise_sigma,
            abs: self.abs,
            context: format!("explainer:{}", self.name),
        };
        cfg.validate()?;
        Ok(Some(cfg))
    }

    /// Set one field from its textual form. On error `self` is unchanged.
    pub fn set_field(&mut self, field: &str, text: &str) -> Result<()> {
        let param = format!("explainers.{}.{field}", self.name);
        let incompatible = |expected: &str| Error::TypeIncompatibleValue {
            param: param.clone(),
            value: text.to_string(),
            expected: expected.to_string(),
        };
        let mut next = self.clone();
        match field {
            "ig_steps" => next.ig_steps = text.parse().map_err(|_| incompatible("integer >= 2"))?,
            "shap_samples" => {
                next.shap_samples = text.parse().map_err(|_| incompatible("integer >= 1"))?
            }
            "shap_noise_sigma" => {
                next.shap_noise_sigma = text.parse().map_err(|_| incompatible("number >= 0"))?
            }
            "abs" => next.abs = text.parse().map_err(|_| incompatible("bool"))?,
            "baseline" => next.baseline = text.to_string(),
            _ => {
                return Err(Error::UnknownParamPath(format!(
                    "{param}; fields: {}",
                    EXPLAINER_FIELDS.join(", ")
                )))
            }
        }
        next.config().map_err(|e| match e {
            Error::InvalidParameter(m) => incompatible(&m),
            other => other,
        })?;
        *self = next;
        Ok(())
    }
}

/// A metric by registry name plus the hyperparameters that differ from its
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, ParamValue>,
}

impl MetricSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, param: &str, value: ParamValue) -> Self {
        self.params.insert(param.to_string(), value);
        self
    }

    /// Effective configuration against `registry`.
    pub fn resolve(&self, registry: &Registry) -> Result<MetricConfig> {
        let metric = registry.lookup(&self.name)?;
        let mut cfg = metric.default_config();
        for (k, v) in &self.params {
            cfg.set(k, v.clone()).map_err(|e| match e {
                Error::InvalidParameter(m) => Error::PlanValidation(format!("metric `{}`: {m}", self.name)),
                other => other,
            })?;
        }
        Ok(cfg)
    }
}

/// Everything needed to reproduce an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPlan {
    pub explainers: Vec<ExplainerSpec>,
    pub metrics: Vec<MetricSpec>,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_limit: Option<usize>,
    #[serde(default)]
    pub data: DataRefs,
}

/// File locations of the evaluated artefacts. Informational for library use;
/// the command line reads them when replaying a plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataRefs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<String>,
}

impl EvaluationPlan {
    pub fn new(master_seed: u64) -> Self {
        Self {
            explainers: Vec::new(),
            metrics: Vec::new(),
            master_seed,
            sample_limit: None,
            data: DataRefs::default(),
        }
    }

    pub fn explainer(mut self, spec: ExplainerSpec) -> Self {
        self.explainers.push(spec);
        self
    }

    pub fn metric(mut self, spec: MetricSpec) -> Self {
        self.metrics.push(spec);
        self
    }

    /// Add every metric of `registry` with default settings.
    pub fn all_metrics(mut self, registry: &Registry) -> Self {
        self.metrics
            .extend(registry.names().into_iter().map(MetricSpec::new));
        self
    }

    /// Static checks that need no data: names, duplicates, parameter values.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.explainers.is_empty() {
            return Err(Error::PlanValidation("plan has no explainers".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::PlanValidation("plan has no metrics".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.explainers {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::PlanValidation(format!("duplicate explainer name `{}`", e.name)));
            }
            e.config().map_err(|err| {
                Error::PlanValidation(format!("explainer `{}`: {err}", e.name))
            })?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.metrics {
            if !seen.insert(m.name.as_str()) {
                return Err(Error::PlanValidation(format!("duplicate metric `{}`", m.name)));
            }
            m.resolve(registry)?;
        }
        Ok(())
    }
}
