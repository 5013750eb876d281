//! Feature replacement strategies and perturbation orderings.
//!
//! Inputs are assumed to live in `[0, 1]`: "black" is `0.0` and "white" is
//! `1.0`. Custom strategies plug in through [`PerturbFn`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// User-supplied replacement strategy.
///
/// Only positions listed in `indices` are taken from the returned vector;
/// everything else is copied from `x` by the caller.
pub trait PerturbFn: Send + Sync {
    fn name(&self) -> &str;
    fn perturb(&self, x: &[f64], indices: &[usize], rng: &mut Rng) -> Vec<f64>;
}

#[derive(Clone)]
#[derive(Default)]
pub enum BaselineSpec {
    #[default]
    Black,
    White,
    Mean,
    UniformNoise,
    GaussianNoise { scale: f64 },
    Custom(Arc<dyn PerturbFn>),
}

impl BaselineSpec {
    pub const BUILTIN: [&'static str; 5] = ["black", "white", "mean", "uniform_noise", "gaussian_noise"];

    /// True when the replacement draws from the rng.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, BaselineSpec::Black | BaselineSpec::White | BaselineSpec::Mean)
    }
}


impl fmt::Debug for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BaselineSpec({self})")
    }
}

impl fmt::Display for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineSpec::Black => f.write_str("black"),
            BaselineSpec::White => f.write_str("white"),
            BaselineSpec::Mean => f.write_str("mean"),
            BaselineSpec::UniformNoise => f.write_str("uniform_noise"),
            BaselineSpec::GaussianNoise { scale } => write!(f, "gaussian_noise:{scale}"),
            BaselineSpec::Custom(p) => write!(f, "custom:{}", p.name()),
        }
    }
}

impl PartialEq for BaselineSpec {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl FromStr for BaselineSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let bad = || Error::InvalidParameter(format!(
            "unknown baseline \"{s}\"; expected one of {}",
            Self::BUILTIN.join(", ")
        ));
        match (kind, arg) {
            ("black", None) => Ok(BaselineSpec::Black),
            ("white", None) => Ok(BaselineSpec::White),
            ("mean", None) => Ok(BaselineSpec::Mean),
            ("uniform_noise", None) => Ok(BaselineSpec::UniformNoise),
            ("gaussian_noise", None) => Ok(BaselineSpec::GaussianNoise { scale: 0.1 }),
            ("gaussian_noise", Some(a)) => {
                let scale: f64 = a.parse().map_err(|_| bad())?;
                if !(scale >= 0.0 && scale.is_finite()) {
                    return Err(bad());
                }
                Ok(BaselineSpec::GaussianNoise { scale })
            }
            _ => Err(bad()),
        }
    }
}

fn range(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Copy of `x` with the features at `indices` replaced according to `baseline`.
pub fn replace_features(
    x: &[f64],
    indices: &[usize],
    baseline: &BaselineSpec,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= x.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: x.len(),
        });
    }
    let mut out = x.to_vec();
    if indices.is_empty() {
        return Ok(out);
    }
    match baseline {
        BaselineSpec::Black => indices.iter().for_each(|&i| out[i] = 0.0),
        BaselineSpec::White => indices.iter().for_each(|&i| out[i] = 1.0),
        BaselineSpec::Mean => {
            let m = crate::stats::mean(x);
            indices.iter().for_each(|&i| out[i] = m);
        }
        BaselineSpec::UniformNoise => {
            let (lo, hi) = range(x);
            for &i in indices {
                out[i] = rng.uniform_range(lo, hi);
            }
        }
        BaselineSpec::GaussianNoise { scale } => {
            let (lo, hi) = range(x);
            for &i in indices {
                out[i] = (x[i] + scale * rng.normal()).clamp(lo, hi);
            }
        }
        BaselineSpec::Custom(f) => {
            let replaced = f.perturb(x, indices, rng);
            if replaced.len() != x.len() {
                return Err(Error::LengthMismatch {
                    left: x.len(),
                    right: replaced.len(),
                });
            }
            for &i in indices {
                out[i] = replaced[i];
            }
        }
    }
    Ok(out)
}

/// `x + δ` with `δ` i.i.d. uniform on `[-radius, radius]`.
pub fn uniform_ball_perturb(x: &[f64], radius: f64, rng: &mut Rng) -> Vec<f64> {
    x.iter()
        .map(|&v| v + rng.uniform_range(-radius, radius))
        .collect()
}

/// Feature indices sorted by descending attribution, ties by lowest index.
pub fn ranked_features(a: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    order
}

/// Ordered partition of all feature positions into perturbation groups.
///
/// With `patch_size == 1`, features are ranked by attribution and chunked into
/// groups of `features_in_step`. With a larger `patch_size`, inputs of rank
/// >= 2 are tiled into square patches over the last two axes (spanning all
/// > leading channels) and 1-D inputs into contiguous windows; patches are
/// > ordered by attribution sum, descending, ties by lowest flat index.
pub fn patch_indices(
    shape: &[usize],
    a: &[f64],
    features_in_step: usize,
    patch_size: usize,
) -> Result<Vec<Vec<usize>>> {
    if patch_size == 0 {
        return Err(Error::InvalidPatchSize(patch_size));
    }
    if features_in_step == 0 {
        return Err(Error::InvalidPatchSize(features_in_step));
    }
    let total: usize = shape.iter().product();
    if total != a.len() {
        return Err(Error::ShapeMismatch {
            expected: shape.to_vec(),
            got: vec![a.len()],
        });
    }
    if patch_size == 1 {
        return Ok(ranked_features(a)
            .chunks(features_in_step)
            .map(<[usize]>::to_vec)
            .collect());
    }
    let mut groups: Vec<Vec<usize>> = if shape.len() == 1 {
        (0..total)
            .collect::<Vec<_>>()
            .chunks(patch_size)
            .map(<[usize]>::to_vec)
            .collect()
    } else {
        let h = shape[shape.len() - 2];
        let w = shape[shape.len() - 1];
        let channels = total / (h * w);
        let mut out = Vec::new();
        for py in (0..h).step_by(patch_size) {
            for px in (0..w).step_by(patch_size) {
                let mut g = Vec::new();
                for c in 0..channels {
                    for y in py..(py + patch_size).min(h) {
                        for x in px..(px + patch_size).min(w) {
                            g.push((c * h + y) * w + x);
                        }
                    }
                }
                g.sort_unstable();
                out.push(g);
            }
        }
        out
    };
    let sums: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| a[i]).sum())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&i, &j| sums[j].total_cmp(&sums[i]).then(groups[i][0].cmp(&groups[j][0])));
    let mut taken: Vec<Option<Vec<usize>>> = groups.drain(..).map(Some).collect();
    Ok(order.into_iter().map(|i| taken[i].take().unwrap()).collect())
}
