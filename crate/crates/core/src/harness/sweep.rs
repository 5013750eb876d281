use serde::{Deserialize, Serialize};

use super::plan::EvaluationPlan;
use super::{evaluate_with_threads, rank, Dataset, EvaluationReport, RankingTable};
use crate::error::{Error, Result};
use crate::metrics::Registry;
use crate::model::Model;
use crate::stats::kendall_tau;

/// Rankings per swept value and their pairwise agreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: String,
    pub values: Vec<String>,
    pub reports: Vec<EvaluationReport>,
    pub rankings: Vec<RankingTable>,
    /// Kendall tau between the overall explainer scores of each pair of
    /// values.
    pub tau: Vec<Vec<f64>>,
}

/// Copy of `plan` with `path` set to `value`.
///
/// Paths are `metrics.<metric>.<param>` or `explainers.<name>.<field>`.
pub fn plan_with(plan: &EvaluationPlan, registry: &Registry, path: &str, value: &str) -> Result<EvaluationPlan> {
    let parts: Vec<&str> = path.split('.').collect();
    let unknown = |why: String| Error::UnknownParamPath(format!("{path}: {why}"));
    let [section, target, field] = parts[..] else {
        return Err(unknown(
            "expected metrics.<metric>.<param> or explainers.<name>.<field>".into(),
        ));
    };
    let mut out = plan.clone();
    match section {
        "metrics" => {
            let names: Vec<&str> = plan.metrics.iter().map(|m| m.name.as_str()).collect();
            let spec = out
                .metrics
                .iter_mut()
                .find(|m| m.name == target)
                .ok_or_else(|| unknown(format!("metric not in plan ({})", names.join(", "))))?;
            let mut cfg = spec.resolve(registry)?;
            if !cfg.schema().iter().any(|p| p.name == field) {
                let params: Vec<&str> = cfg.schema().iter().map(|p| p.name).collect();
                return Err(unknown(format!("no such parameter ({})", params.join(", "))));
            }
            cfg.set_text(field, value)?;
            spec.params.insert(field.to_string(), cfg.values()[field].clone());
        }
        "explainers" => {
            let names: Vec<&str> = plan.explainers.iter().map(|e| e.name.as_str()).collect();
            let spec = out
                .explainers
                .iter_mut()
                .find(|e| e.name == target)
                .ok_or_else(|| unknown(format!("explainer not in plan ({})", names.join(", "))))?;
            spec.set_field(field, value)?;
        }
        _ => return Err(unknown(format!("unknown section `{section}`"))),
    }
    Ok(out)
}

/// Evaluate `plan` once per value of `path` with identical seeds and compare
/// the resulting explainer rankings.
pub fn sensitivity_sweep(
    plan: &EvaluationPlan,
    registry: &Registry,
    model: &Model,
    data: &Dataset,
    path: &str,
    values: &[String],
    threads: Option<usize>,
) -> Result<SweepResult> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a sweep needs at least two values, got {}",
            values.len()
        )));
    }
    if plan.explainers.len() < 2 {
        return Err(Error::FewerThanTwoExplainers(plan.explainers.len()));
    }
    let plans = values
        .iter()
        .map(|v| plan_with(plan, registry, path, v))
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::with_capacity(plans.len());
    let mut rankings = Vec::with_capacity(plans.len());
    for p in &plans {
        let report = evaluate_with_threads(p, registry, model, data, threads)?;
        rankings.push(rank(&report.results)?);
        reports.push(report);
    }
    let tau = rankings
        .iter()
        .map(|a| {
            rankings
                .iter()
                .map(|b| kendall_tau(&a.overall, &b.overall))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        param: path.to_string(),
        values: values.to_vec(),
        reports,
        rankings,
        tau,
    })
}
