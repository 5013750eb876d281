//! Gradient-based attribution methods plus a random control.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::perturb::{replace_features, BaselineSpec};
use crate::rng::{sample_key, Rng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Saliency,
    GradientXInput,
    IntegratedGradients,
    GradientShap,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Saliency,
        Method::GradientXInput,
        Method::IntegratedGradients,
        Method::GradientShap,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Saliency => "saliency",
            Method::GradientXInput => "gradient_x_input",
            Method::IntegratedGradients => "integrated_gradients",
            Method::GradientShap => "gradient_shap",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown explanation method \"{s}\"; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerConfig {
    pub method: Method,
    pub ig_steps: usize,
    pub baseline: BaselineSpec,
    pub shap_samples: usize,
    pub shap_noise_sigma: f64,
    pub abs: bool,
    /// Prefix for the per-sample random stream contexts.
    pub context: String,
}

impl ExplainerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ig_steps: 64,
            baseline: BaselineSpec::Black,
            shap_samples: 16,
            shap_noise_sigma: 0.1,
            abs: false,
            context: format!("explainer:{}", method.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ig_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "ig_steps must be >= 2, got {}",
                self.ig_steps
            )));
        }
        if self.shap_samples < 1 {
            return Err(Error::InvalidParameter("shap_samples must be >= 1".into()));
        }
        if !(self.shap_noise_sigma >= 0.0 && self.shap_noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shap_noise_sigma must be finite and >= 0, got {}",
                self.shap_noise_sigma
            )));
        }
        Ok(())
    }
}

/// Attribution for one flattened sample and target class.
pub fn explain_sample(
    model: &dyn Classifier,
    x: &[f64],
    class: usize,
    cfg: &ExplainerConfig,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x.len() != model.input_len() {
        return Err(Error::ShapeMismatch {
            expected: model.input_shape().to_vec(),
            got: vec![x.len()],
        });
    }
    if class >= model.num_classes() {
        return Err(Error::InvalidClass {
            class,
            num_classes: model.num_classes(),
        });
    }
    let all: Vec<usize> = (0..x.len()).collect();
    let mut a: Vec<f64> = match cfg.method {
        Method::Saliency => model
            .logit_gradient(x, class)?
            .into_iter()
            .map(f64::abs)
            .collect(),
        Method::GradientXInput => {
            let g = model.logit_gradient(x, class)?;
            x.iter().zip(g).map(|(xi, gi)| xi * gi).collect()
        }
        Method::IntegratedGradients => {
            let x0 = replace_features(x, &all, &cfg.baseline, rng)?;
            let m = cfg.ig_steps;
            let mut acc = vec![0.0; x.len()];
            let mut point = vec![0.0; x.len()];
            for k in 0..m {
                let alpha = (k as f64 + 0.5) / m as f64;
                for ((p, xi), bi) in point.iter_mut().zip(x).zip(&x0) {
                    *p = bi + alpha * (xi - bi);
                }
                let g = model.logit_gradient(&point, class)?;
                acc.iter_mut().zip(g).for_each(|(a, gi)| *a += gi);
            }
            acc.iter()
                .zip(x)
                .zip(&x0)
                .map(|((g, xi), bi)| (xi - bi) * g / m as f64)
                .collect()
        }
        Method::GradientShap => {
            let base = replace_features(x, &all, &cfg.baseline, rng)?;
            let mut acc = vec![0.0; x.len()];
            let mut noisy = vec![0.0; x.len()];
            let mut point = vec![0.0; x.len()];
            for _ in 0..cfg.shap_samples {
                for (n, b) in noisy.iter_mut().zip(&base) {
                    *n = b + cfg.shap_noise_sigma * rng.normal();
                }
                let alpha = rng.uniform();
                for ((p, xi), ni) in point.iter_mut().zip(x).zip(&noisy) {
                    *p = ni + alpha * (xi - ni);
                }
                let g = model.logit_gradient(&point, class)?;
                for (((a, gi), xi), ni) in acc.iter_mut().zip(g).zip(x).zip(&noisy) {
                    *a += (xi - ni) * gi;
                }
            }
            acc.into_iter()
                .map(|v| v / cfg.shap_samples as f64)
                .collect()
        }
        Method::Random => (0..x.len()).map(|_| rng.uniform()).collect(),
    };
    if cfg.abs {
        a.iter_mut().for_each(|v| *v = v.abs());
    }
    Ok(a)
}

/// Batched attributions. Each sample draws from its own stream, keyed by the
/// config context and the sample's content, so results do not depend on
/// batch order.
pub fn explain(
    model: &dyn Classifier,
    x: &Tensor,
    classes: &[usize],
    cfg: &ExplainerConfig,
    master_seed: u64,
) -> Result<Tensor> {
    if x.shape().len() < 2 || x.sample_shape() != model.input_shape() {
        let mut expected = vec![x.shape()[0]];
        expected.extend_from_slice(model.input_shape());
        return Err(Error::ShapeMismatch {
            expected,
            got: x.shape().to_vec(),
        });
    }
    if classes.len() != x.batch_size() {
        return Err(Error::LengthMismatch {
            left: x.batch_size(),
            right: classes.len(),
        });
    }
    let mut out = Vec::with_capacity(x.len());
    for (i, &c) in classes.iter().enumerate() {
        let xs = x.sample_data(i);
        let mut rng = Rng::derive(master_seed, &format!("{}/{}", cfg.context, sample_key(xs, c)));
        out.extend(explain_sample(model, xs, c, cfg, &mut rng)?);
    }
    Tensor::new(x.shape().to_vec(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalisation {
    #[default]
    None,
    MaxAbs,
    L2,
}

impl FromStr for Normalisation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalisation::None),
            "max_abs" => Ok(Normalisation::MaxAbs),
            "l2" => Ok(Normalisation::L2),
            _ => Err(Error::InvalidParameter(format!(
                "unknown normalisation \"{s}\"; expected none, max_abs or l2"
            ))),
        }
    }
}

/// Rescale one sample's attribution.
pub fn normalise_attribution(a: &[f64], mode: Normalisation) -> Result<Vec<f64>> {
    let denom = match mode {
        Normalisation::None => return Ok(a.to_vec()),
        Normalisation::MaxAbs => a.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Normalisation::L2 => crate::stats::l2_norm(a),
    };
    if denom == 0.0 {
        return Err(Error::AllZeroAttribution);
    }
    Ok(a.iter().map(|v| v / denom).collect())
}
