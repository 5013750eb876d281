//! Localisation: agreement between attributions and a ground-truth mask.
//!
//! Masks are boolean vectors over flat feature positions and must be neither
//! empty nor full.

use super::{
    shared_params, Category, Direction, Metric, MetricConfig, ParamKind, ParamSpec, ParamValue,
    Requirements, SampleContext, SampleScore,
};
use crate::error::{Error, Result};
use crate::perturb::ranked_features;
use crate::rng::Rng;
use crate::stats;

fn check_mask(a: &[f64], mask: &[bool]) -> Result<usize> {
    if a.len() != mask.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: mask.len(),
        });
    }
    let inside = mask.iter().filter(|&&m| m).count();
    if inside == 0 {
        return Err(Error::EmptyMask);
    }
    if inside == mask.len() {
        return Err(Error::FullMask);
    }
    Ok(inside)
}

/// 1 if the largest attribution falls inside the mask. Ties go to the lowest
/// index.
pub fn pointing_game(a: &[f64], mask: &[bool]) -> Result<f64> {
    check_mask(a, mask)?;
    let best = ranked_features(a)[0];
    Ok(if mask[best] { 1.0 } else { 0.0 })
}

fn top_hits(a: &[f64], mask: &[bool], k: usize) -> usize {
    ranked_features(a)
        .into_iter()
        .take(k)
        .filter(|&i| mask[i])
        .count()
}

/// Fraction of the `k` highest attributions that fall inside the mask.
pub fn top_k_intersection(a: &[f64], mask: &[bool], k: usize) -> Result<f64> {
    check_mask(a, mask)?;
    if k == 0 || k > a.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            a.len()
        )));
    }
    Ok(top_hits(a, mask, k) as f64 / k as f64)
}

/// Fraction of the top-|mask| attributions that fall inside the mask.
pub fn relevance_rank_accuracy(a: &[f64], mask: &[bool]) -> Result<f64> {
    let inside = check_mask(a, mask)?;
    Ok(top_hits(a, mask, inside) as f64 / inside as f64)
}

/// Share of positive attribution mass that lies inside the mask.
pub fn relevance_mass_accuracy(a: &[f64], mask: &[bool]) -> Result<f64> {
    check_mask(a, mask)?;
    let total: f64 = a.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::NoPositiveAttribution);
    }
    let inside: f64 = a
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.max(0.0))
        .sum();
    Ok(inside / total)
}

/// Positive mass ratio, optionally weighted by `total size / mask size` and
/// capped at 1.
pub fn attribution_localisation(a: &[f64], mask: &[bool], weighted: bool) -> Result<f64> {
    let inside = check_mask(a, mask)?;
    let ratio = relevance_mass_accuracy(a, mask)?;
    if weighted {
        Ok((ratio * a.len() as f64 / inside as f64).min(1.0))
    } else {
        Ok(ratio)
    }
}

/// ROC AUC of attributions as scores for mask membership.
pub fn localisation_auc(a: &[f64], mask: &[bool]) -> Result<f64> {
    check_mask(a, mask)?;
    stats::roc_auc(a, mask)
}

macro_rules! localisation_metric {
    ($ty:ident, $name:literal, $params:expr, |$a:ident, $mask:ident, $cfg:ident| $body:expr) => {
        pub struct $ty;

        impl Metric for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn category(&self) -> Category {
                Category::Localisation
            }
            fn direction(&self) -> Direction {
                Direction::HigherBetter
            }
            fn params(&self) -> Vec<ParamSpec> {
                let mut v: Vec<ParamSpec> = $params;
                v.extend(shared_params(false));
                v
            }
            fn requirements(&self) -> Requirements {
                Requirements {
                    masks: true,
                    ..Default::default()
                }
            }
            fn score(&self, ctx: &SampleContext<'_>, $cfg: &MetricConfig, _rng: &mut Rng) -> Result<SampleScore> {
                let $mask = ctx.require_mask()?;
                let $a = ctx.attribution;
                $body.map(SampleScore::scalar)
            }
        }
    };
}

localisation_metric!(PointingGame, "pointing_game", vec![], |a, mask, _cfg| pointing_game(a, mask));
localisation_metric!(
    TopKIntersection,
    "top_k_intersection",
    vec![ParamSpec::new("k", ParamKind::Int { min: 1 }, ParamValue::Int(8)).sensitive()],
    |a, mask, cfg| top_k_intersection(a, mask, cfg.usize("k"))
);
localisation_metric!(RelevanceRankAccuracy, "relevance_rank_accuracy", vec![], |a, mask, _cfg| {
    relevance_rank_accuracy(a, mask)
});
localisation_metric!(RelevanceMassAccuracy, "relevance_mass_accuracy", vec![], |a, mask, _cfg| {
    relevance_mass_accuracy(a, mask)
});
localisation_metric!(
    AttributionLocalisation,
    "attribution_localisation",
    vec![ParamSpec::new("weighted", ParamKind::Bool, ParamValue::Bool(false))],
    |a, mask, cfg| attribution_localisation(a, mask, cfg.bool("weighted"))
);
localisation_metric!(LocalisationAuc, "localisation_auc", vec![], |a, mask, _cfg| {
    localisation_auc(a, mask)
});
