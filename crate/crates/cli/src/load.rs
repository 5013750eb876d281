//! Reading models, tensors and plans from disk.

use std::path::{Path, PathBuf};

use xaieval_core::harness::{EvaluationPlan, EvaluationReport};
use xaieval_core::io::read_qtensor;
use xaieval_core::model::qnn::load_model;
use xaieval_core::{Error, Model, Result, Tensor};

pub fn model(path: &Path, verbose: bool) -> Result<Model> {
    let (model, notes) = load_model(path)?;
    if verbose {
        for n in notes {
            eprintln!("info[model]: {n}");
        }
    }
    Ok(model)
}

pub fn inputs(path: &Path) -> Result<Tensor> {
    read_qtensor(path)
}

/// Class indices from a tensor of non-negative integers.
pub fn labels(path: &Path) -> Result<Vec<usize>> {
    let t = read_qtensor(path)?;
    t.data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(Error::Parse {
                    context: path.display().to_string(),
                    message: format!("label {i} is {v}, expected a non-negative integer"),
                })
            }
        })
        .collect()
}

/// Non-zero entries mark ground-truth features.
pub fn masks(path: &Path) -> Result<Vec<bool>> {
    Ok(read_qtensor(path)?.data().iter().map(|&v| v != 0.0).collect())
}

/// A plan file, or a report whose embedded plan is replayed.
pub fn plan(path: &Path) -> Result<EvaluationPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if let Ok(plan) = serde_json::from_str::<EvaluationPlan>(&text) {
        return Ok(plan);
    }
    serde_json::from_str::<EvaluationReport>(&text)
        .map(|r| r.meta.plan)
        .map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: format!("neither a plan nor a report: {e}"),
        })
}

/// `NAME=PATH`, or `PATH` named after its file stem.
pub fn attribution_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, path)
        }
    }
}

pub fn required<'a>(cli: &'a Option<PathBuf>, planned: &'a Option<String>, flag: &str) -> Result<PathBuf> {
    cli.clone()
        .or_else(|| planned.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::PlanValidation(format!("missing --{flag}")))
}
