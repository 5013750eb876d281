//! Metric registry.
//!
//! Every metric is a pure per-sample procedure tagged with one of six
//! categories and an optimisation direction. Hyperparameters are declared
//! through a [`ParamSpec`] schema so that the effective configuration of any
//! run can be recorded, replayed and swept.
//!
//! The bundled registry holds 22 metrics: five faithfulness, three
//! robustness, six localisation, three complexity, three axiomatic and two
//! randomisation metrics. The concrete selection per category is this
//! crate's choice of well-known representatives; new metrics can be added
//! with [`Registry::register`].

pub mod axiomatic;
pub mod complexity;
pub mod faithfulness;
pub mod localisation;
pub mod randomisation;
pub mod robustness;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::ExplainerConfig;
use crate::model::Model;
use crate::perturb::{BaselineSpec, PerturbFn};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Faithfulness,
    Robustness,
    Localisation,
    Complexity,
    Axiomatic,
    Randomisation,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Faithfulness,
        Category::Robustness,
        Category::Localisation,
        Category::Complexity,
        Category::Axiomatic,
        Category::Randomisation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Faithfulness => "faithfulness",
            Category::Robustness => "robustness",
            Category::Localisation => "localisation",
            Category::Complexity => "complexity",
            Category::Axiomatic => "axiomatic",
            Category::Randomisation => "randomisation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::HigherBetter => "higher_better",
            Direction::LowerBetter => "lower_better",
        })
    }
}

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Bool,
    /// Integer with an inclusive lower bound.
    Int { min: i64 },
    /// Finite float with an inclusive lower bound.
    Float { min: f64 },
    /// A built-in perturbation baseline name.
    Baseline,
    Choice(&'static [&'static str]),
}

impl ParamKind {
    fn describe(&self) -> String {
        match self {
            ParamKind::Bool => "bool".into(),
            ParamKind::Int { min } => format!("integer >= {min}"),
            ParamKind::Float { min } => format!("number >= {min}"),
            ParamKind::Baseline => format!("baseline ({})", BaselineSpec::BUILTIN.join(", ")),
            ParamKind::Choice(c) => format!("one of {}", c.join(", ")),
        }
    }

    /// Check a value against this kind, coercing integers to floats.
    fn accept(&self, name: &str, value: ParamValue) -> Result<ParamValue> {
        let bad = |v: &ParamValue| Error::TypeIncompatibleValue {
            param: name.to_string(),
            value: v.to_string(),
            expected: self.describe(),
        };
        match (self, &value) {
            (ParamKind::Bool, ParamValue::Bool(_)) => Ok(value),
            (ParamKind::Int { min }, ParamValue::Int(i)) if i >= min => Ok(value),
            (ParamKind::Float { min }, ParamValue::Float(x)) if x.is_finite() && x >= min => Ok(value),
            (ParamKind::Float { min }, ParamValue::Int(i)) if *i as f64 >= *min => {
                Ok(ParamValue::Float(*i as f64))
            }
            (ParamKind::Baseline, ParamValue::Text(s)) => {
                if s.starts_with("custom:") {
                    Ok(value)
                } else {
                    s.parse::<BaselineSpec>()
                        .map(|b| ParamValue::Text(b.to_string()))
                        .map_err(|_| bad(&value))
                }
            }
            (ParamKind::Choice(c), ParamValue::Text(s)) if c.contains(&s.as_str()) => Ok(value),
            _ => Err(bad(&value)),
        }
    }

    /// Parse a command-line style string for this kind.
    fn parse_text(&self, name: &str, text: &str) -> Result<ParamValue> {
        let value = match self {
            ParamKind::Bool => match text {
                "true" => ParamValue::Bool(true),
                "false" => ParamValue::Bool(false),
                _ => ParamValue::Text(text.into()),
            },
            ParamKind::Int { .. } => text
                .parse()
                .map(ParamValue::Int)
                .unwrap_or_else(|_| ParamValue::Text(text.into())),
            ParamKind::Float { .. } => text
                .parse()
                .map(ParamValue::Float)
                .unwrap_or_else(|_| ParamValue::Text(text.into())),
            ParamKind::Baseline | ParamKind::Choice(_) => ParamValue::Text(text.into()),
        };
        self.accept(name, value)
    }
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: ParamValue,
    /// Results are known to depend strongly on this value; leaving it at the
    /// default triggers a caution.
    pub sensitive: bool,
}

impl ParamSpec {
    pub fn new(name: &'static str, kind: ParamKind, default: ParamValue) -> Self {
        Self {
            name,
            kind,
            default,
            sensitive: false,
        }
    }

    pub fn sensitive(mut self) -> Self {
        self.sensitive = true;
        self
    }
}

fn shared_params(perturbs: bool) -> Vec<ParamSpec> {
    let mut v = vec![
        ParamSpec::new("normalise", ParamKind::Bool, ParamValue::Bool(false)),
        ParamSpec::new("abs", ParamKind::Bool, ParamValue::Bool(false)),
    ];
    if perturbs {
        v.push(
            ParamSpec::new(
                "perturb_baseline",
                ParamKind::Baseline,
                ParamValue::Text("black".into()),
            )
            .sensitive(),
        );
    }
    v
}

/// Effective hyperparameters of one metric instance.
#[derive(Clone)]
pub struct MetricConfig {
    schema: Vec<ParamSpec>,
    values: BTreeMap<String, ParamValue>,
    overridden: Vec<String>,
    custom_baselines: BTreeMap<String, Arc<dyn PerturbFn>>,
}

impl fmt::Debug for MetricConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricConfig").field("values", &self.values).finish()
    }
}

impl PartialEq for MetricConfig {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl MetricConfig {
    pub fn defaults(schema: Vec<ParamSpec>) -> Self {
        let values = schema
            .iter()
            .map(|p| (p.name.to_string(), p.default.clone()))
            .collect();
        Self {
            schema,
            values,
            overridden: Vec::new(),
            custom_baselines: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &[ParamSpec] {
        &self.schema
    }

    fn spec(&self, name: &str) -> Result<&ParamSpec> {
        self.schema
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParamPath(name.to_string()))
    }

    pub fn set(&mut self, name: &str, value: ParamValue) -> Result<()> {
        let value = self.spec(name)?.kind.accept(name, value)?;
        self.values.insert(name.to_string(), value);
        if !self.overridden.iter().any(|n| n == name) {
            self.overridden.push(name.to_string());
        }
        Ok(())
    }

    /// Set a parameter from its textual form (`"8"`, `"true"`, `"mean"`).
    pub fn set_text(&mut self, name: &str, text: &str) -> Result<()> {
        let value = self.spec(name)?.kind.parse_text(name, text)?;
        self.set(name, value)
    }

    /// Use a user-supplied replacement strategy for a baseline parameter.
    pub fn set_custom_baseline(&mut self, name: &str, f: Arc<dyn PerturbFn>) -> Result<()> {
        let spec = self.spec(name)?;
        if spec.kind != ParamKind::Baseline {
            return Err(Error::TypeIncompatibleValue {
                param: name.into(),
                value: format!("custom:{}", f.name()),
                expected: spec.kind.describe(),
            });
        }
        self.set(name, ParamValue::Text(format!("custom:{}", f.name())))?;
        self.custom_baselines.insert(name.to_string(), f);
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<String, ParamValue> {
        &self.values
    }

    /// Sensitive parameters still at their default value.
    pub fn sensitive_defaults(&self) -> Vec<&'static str> {
        self.schema
            .iter()
            .filter(|p| p.sensitive && self.values.get(p.name) == Some(&p.default))
            .map(|p| p.name)
            .collect()
    }

    pub fn is_overridden(&self, name: &str) -> bool {
        self.overridden.iter().any(|n| n == name)
    }

    fn get(&self, name: &str) -> &ParamValue {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("metric parameter `{name}` is not declared"))
    }

    pub fn bool(&self, name: &str) -> bool {
        match self.get(name) {
            ParamValue::Bool(b) => *b,
            other => panic!("parameter `{name}` is not a bool: {other:?}"),
        }
    }

    pub fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            ParamValue::Int(i) => *i,
            other => panic!("parameter `{name}` is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, name: &str) -> usize {
        self.int(name).max(0) as usize
    }

    pub fn float(&self, name: &str) -> f64 {
        match self.get(name) {
            ParamValue::Float(x) => *x,
            ParamValue::Int(i) => *i as f64,
            other => panic!("parameter `{name}` is not a number: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match self.get(name) {
            ParamValue::Text(s) => s,
            other => panic!("parameter `{name}` is not text: {other:?}"),
        }
    }

    pub fn baseline(&self, name: &str) -> Result<BaselineSpec> {
        if let Some(f) = self.custom_baselines.get(name) {
            return Ok(BaselineSpec::Custom(f.clone()));
        }
        self.text(name).parse()
    }
}

/// One per-sample outcome: a score, or a tagged failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleOutcome {
    Score(SampleScore),
    Failed { error: String, message: String },
}

impl SampleOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            SampleOutcome::Score(s) => Some(s.value),
            SampleOutcome::Failed { .. } => None,
        }
    }

    pub fn from_result(r: Result<SampleScore>) -> Self {
        match r {
            Ok(s) => SampleOutcome::Score(s),
            Err(e) => SampleOutcome::Failed {
                error: e.code().to_string(),
                message: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl SampleScore {
    pub fn scalar(value: f64) -> Self {
        Self {
            value,
            curve: None,
            pass: None,
        }
    }

    pub fn curve(value: f64, curve: Vec<f64>) -> Self {
        Self {
            value,
            curve: Some(curve),
            pass: None,
        }
    }

    pub fn check(value: f64, pass: bool) -> Self {
        Self {
            value,
            curve: None,
            pass: Some(pass),
        }
    }
}

/// Mean and population standard deviation over valid samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Aggregate {
    pub fn from_outcomes(outcomes: &[SampleOutcome]) -> Self {
        let values: Vec<f64> = outcomes.iter().filter_map(SampleOutcome::value).collect();
        if values.is_empty() {
            return Self {
                mean: None,
                std: None,
                n: 0,
            };
        }
        Self {
            mean: Some(crate::stats::mean(&values)),
            std: Some(crate::stats::std_dev(&values)),
            n: values.len(),
        }
    }
}

/// Everything a metric may look at for one sample.
pub struct SampleContext<'a> {
    pub model: &'a Model,
    /// Flattened input.
    pub x: &'a [f64],
    /// Shape of one input sample.
    pub shape: &'a [usize],
    pub class: usize,
    /// Attribution after the metric's normalise/abs preprocessing.
    pub attribution: &'a [f64],
    pub mask: Option<&'a [bool]>,
    /// Present when the explanation method can be re-run.
    pub explainer: Option<&'a ExplainerConfig>,
}

impl SampleContext<'_> {
    pub fn require_mask(&self) -> Result<&[bool]> {
        self.mask
            .ok_or_else(|| Error::PlanValidation("metric needs a ground-truth mask".into()))
    }

    pub fn require_explainer(&self) -> Result<&ExplainerConfig> {
        self.explainer.ok_or_else(|| {
            Error::PlanValidation("metric needs an explanation method, not fixed attributions".into())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Requirements {
    pub masks: bool,
    pub explainer: bool,
}

pub trait Metric: Send + Sync {
    fn name(&self) -> &'static str;
    fn category(&self) -> Category;
    fn direction(&self) -> Direction;
    /// Complete hyperparameter schema, shared fields included.
    fn params(&self) -> Vec<ParamSpec>;
    fn requirements(&self) -> Requirements {
        Requirements::default()
    }
    fn score(&self, ctx: &SampleContext<'_>, cfg: &MetricConfig, rng: &mut Rng) -> Result<SampleScore>;

    fn default_config(&self) -> MetricConfig {
        MetricConfig::defaults(self.params())
    }
}

/// Apply the shared `normalise` (max-abs) and then `abs` preprocessing.
pub fn prepare_attribution(a: &[f64], cfg: &MetricConfig) -> Result<Vec<f64>> {
    let mut out = if cfg.bool("normalise") {
        crate::explain::normalise_attribution(a, crate::explain::Normalisation::MaxAbs)?
    } else {
        a.to_vec()
    };
    if cfg.bool("abs") {
        out.iter_mut().for_each(|v| *v = v.abs());
    }
    Ok(out)
}

#[derive(Clone)]
pub struct Registry {
    metrics: Vec<Arc<dyn Metric>>,
}

impl Default for Registry {
    fn default() -> Self {
        let metrics: Vec<Arc<dyn Metric>> = vec![
            Arc::new(faithfulness::PerturbationCurve),
            Arc::new(faithfulness::RegionPerturbation),
            Arc::new(faithfulness::InsertionCurve),
            Arc::new(faithfulness::FaithfulnessCorrelation),
            Arc::new(faithfulness::Monotonicity),
            Arc::new(robustness::Sensitivity::max()),
            Arc::new(robustness::Sensitivity::avg()),
            Arc::new(robustness::LocalLipschitz),
            Arc::new(localisation::PointingGame),
            Arc::new(localisation::TopKIntersection),
            Arc::new(localisation::RelevanceRankAccuracy),
            Arc::new(localisation::RelevanceMassAccuracy),
            Arc::new(localisation::AttributionLocalisation),
            Arc::new(localisation::LocalisationAuc),
            Arc::new(complexity::Sparseness),
            Arc::new(complexity::Complexity),
            Arc::new(complexity::EffectiveComplexity),
            Arc::new(axiomatic::Completeness),
            Arc::new(axiomatic::NonSensitivity),
            Arc::new(axiomatic::InputInvariance),
            Arc::new(randomisation::ModelParameterRandomisation),
            Arc::new(randomisation::RandomLogit),
        ];
        Self { metrics }
    }
}

impl Registry {
    pub fn register(&mut self, metric: Arc<dyn Metric>) -> Result<()> {
        if self.get(metric.name()).is_some() {
            return Err(Error::InvalidParameter(format!(
                "metric `{}` is already registered",
                metric.name()
            )));
        }
        self.metrics.push(metric);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Metric>> {
        self.metrics.iter().find(|m| m.name() == name).cloned()
    }

    pub fn lookup(&self, name: &str) -> Result<Arc<dyn Metric>> {
        self.get(name).ok_or_else(|| {
            Error::PlanValidation(format!(
                "unknown metric `{name}`; valid metrics: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Metric>> {
        self.metrics.iter()
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown category `{s}`")))
    }
}
