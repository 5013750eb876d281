//! Subcommand implementations.

use std::path::{Path, PathBuf};

use xaieval_core::fixture::Fixture;
use xaieval_core::harness::{
    self, plan_with, sensitivity_sweep, threads_from_env, Dataset, EvaluationPlan, EvaluationReport, ExplainerSpec,
    MetricSpec, Severity, Warning,
};
use xaieval_core::io::{emit_plot_data, metric_csv, plot_data_csv, read_report, sweep_to_string, tau_csv, write_atomic, write_qtensor, write_report, DType};
use xaieval_core::metrics::Registry;
use xaieval_core::model::qnn::save_model;
use xaieval_core::{Error, Method, Model, Result, Tensor};

use crate::{load, EvaluateArgs, ExplainArgs, FixtureArgs, RankArgs, SensitivityArgs, Status};

pub fn explain(args: ExplainArgs) -> Result<Status> {
    let mut spec = ExplainerSpec::method(args.method.parse::<Method>()?);
    spec.set_field("ig_steps", &args.ig_steps.to_string())?;
    spec.set_field("baseline", &args.baseline)?;
    let cfg = spec.config()?.expect("method explainer");
    let model = load::model(&need(&args.data.model, "model")?, false)?;
    let inputs = load::inputs(&need(&args.data.inputs, "inputs")?)?;
    let labels = load::labels(&need(&args.data.labels, "labels")?)?;
    let a = xaieval_core::explain(&model, &inputs, &labels, &cfg, args.seed)?;
    write_qtensor(&a, DType::F64, &args.out)?;
    Ok(Status::Ok)
}

fn need(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    load::required(path, &None, flag)
}

/// Plan, model and data assembled from a config file and flags.
struct Job {
    plan: EvaluationPlan,
    model: Model,
    data: Dataset,
}

fn build_job(args: &EvaluateArgs, registry: &Registry, verbose: bool) -> Result<Job> {
    let mut plan = match &args.config {
        Some(path) => load::plan(path)?,
        None => EvaluationPlan::new(0),
    };
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
    }
    if args.sample_limit.is_some() {
        plan.sample_limit = args.sample_limit;
    }
    let refs = &plan.data;
    let model_path = load::required(&args.data.model, &refs.model, "model")?;
    let inputs_path = load::required(&args.data.inputs, &refs.inputs, "inputs")?;
    let labels_path = load::required(&args.data.labels, &refs.labels, "labels")?;
    let masks_path = args.masks.clone().or_else(|| refs.masks.as_ref().map(PathBuf::from));

    if !args.methods.is_empty() || !args.attributions.is_empty() {
        plan.explainers.clear();
        for m in &args.methods {
            plan.explainers.push(ExplainerSpec::method(m.parse::<Method>()?));
        }
        for a in &args.attributions {
            let (name, path) = load::attribution_arg(a);
            plan.explainers
                .push(ExplainerSpec::precomputed(name, Some(path.display().to_string())));
        }
    }
    if let Some(list) = &args.metrics {
        plan.metrics.clear();
        if list.trim() == "all" {
            plan = plan.all_metrics(registry);
        } else {
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                plan.metrics.push(MetricSpec::new(name));
            }
        }
    }
    for assignment in &args.set {
        let (path, value) = assignment.split_once('=').ok_or_else(|| {
            Error::UnknownParamPath(format!("{assignment}: expected PATH=VALUE"))
        })?;
        plan = plan_with(&plan, registry, path, value)?;
    }
    plan.data.model = Some(model_path.display().to_string());
    plan.data.inputs = Some(inputs_path.display().to_string());
    plan.data.labels = Some(labels_path.display().to_string());
    plan.data.masks = masks_path.as_ref().map(|p| p.display().to_string());
    plan.validate(registry)?;

    let model = load::model(&model_path, verbose)?;
    let mut data = Dataset::new(load::inputs(&inputs_path)?, load::labels(&labels_path)?)?;
    if let Some(path) = &masks_path {
        data = data.with_masks(load::masks(path)?)?;
    }
    for e in plan.explainers.iter().filter(|e| e.method.is_none()) {
        let path = e.attributions.as_ref().ok_or_else(|| {
            Error::PlanValidation(format!("explainer `{}` has neither a method nor attributions", e.name))
        })?;
        data = data.with_attributions(e.name.clone(), load::inputs(Path::new(path))?)?;
    }
    Ok(Job { plan, model, data })
}

fn print_warnings(warnings: &[Warning], verbose: bool) {
    for w in warnings {
        if w.severity == Severity::Caution || verbose {
            eprintln!("{w}");
        }
    }
}

fn numerical_status(reports: &[&EvaluationReport]) -> Status {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.results.iter())
        .filter(|c| c.all_failed_numerically())
        .map(|c| format!("{}/{}", c.metric, c.explainer))
        .collect();
    if failed.is_empty() {
        Status::Ok
    } else {
        eprintln!("error: every sample failed numerically for {}", failed.join(", "));
        Status::Numerical
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        return Ok(());
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// `dir/stem.suffix` next to `report`.
fn sibling(report: &Path, suffix: &str) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.{suffix}"))
}

pub fn evaluate(args: EvaluateArgs, verbose: bool) -> Result<Status> {
    let registry = Registry::default();
    let job = build_job(&args, &registry, verbose)?;
    let report = harness::evaluate(&job.plan, &registry, &job.model, &job.data)?;
    print_warnings(&report.warnings, verbose);
    if let Some(parent) = args.out.parent() {
        create_dir(parent)?;
    }
    write_report(&report, &args.out)?;
    for spec in &job.plan.metrics {
        let cells: Vec<_> = report.results.iter().filter(|r| r.metric == spec.name).collect();
        write_atomic(&sibling(&args.out, &format!("{}.csv", spec.name)), metric_csv(&cells).as_bytes())?;
    }
    if let Some(ranking) = &report.rankings {
        emit_plot_data(ranking, &sibling(&args.out, "ranking.csv"))?;
    }
    Ok(numerical_status(&[&report]))
}

pub fn sensitivity(args: SensitivityArgs, verbose: bool) -> Result<Status> {
    let registry = Registry::default();
    let job = build_job(&args.eval, &registry, verbose)?;
    let sweep = sensitivity_sweep(
        &job.plan,
        &registry,
        &job.model,
        &job.data,
        &args.param,
        &args.values,
        threads_from_env()?,
    )?;
    if let Some(first) = sweep.reports.first() {
        print_warnings(&first.warnings, verbose);
    }
    let dir = &args.eval.out;
    create_dir(dir)?;
    for (i, (value, ranking)) in sweep.values.iter().zip(&sweep.rankings).enumerate() {
        let name = format!("ranking.{i}.{}.csv", file_safe(value));
        write_atomic(&dir.join(name), plot_data_csv(ranking).as_bytes())?;
    }
    write_atomic(&dir.join("tau.csv"), tau_csv(&sweep.values, &sweep.tau).as_bytes())?;
    write_atomic(&dir.join("sweep.json"), sweep_to_string(&sweep)?.as_bytes())?;
    let reports: Vec<&EvaluationReport> = sweep.reports.iter().collect();
    Ok(numerical_status(&reports))
}

fn file_safe(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub fn rank(args: RankArgs) -> Result<Status> {
    let report = read_report(&args.report)?;
    let ranking = harness::rank(&report.results)?;
    emit_plot_data(&ranking, &args.out)?;
    Ok(Status::Ok)
}

pub fn fixture(args: FixtureArgs) -> Result<Status> {
    let fx = Fixture::build(args.seed)?;
    if args.samples == 0 || args.samples > fx.test.len() {
        return Err(Error::InvalidParameter(format!(
            "--samples must be between 1 and {}, got {}",
            fx.test.len(),
            args.samples
        )));
    }
    let set = fx.test.head(args.samples);
    let dir = &args.out;
    create_dir(dir)?;
    save_model(&fx.model, dir.join("model.json"))?;
    write_qtensor(&set.inputs, DType::F64, dir.join("inputs.qten"))?;
    let labels = Tensor::new(vec![set.len()], set.labels.iter().map(|&y| y as f64).collect())?;
    write_qtensor(&labels, DType::U32, dir.join("labels.qten"))?;
    let masks = Tensor::new(
        set.inputs.shape().to_vec(),
        set.masks.iter().map(|&m| f64::from(u8::from(m))).collect(),
    )?;
    write_qtensor(&masks, DType::U32, dir.join("masks.qten"))?;
    eprintln!(
        "wrote {} samples to {} (test accuracy {:.3})",
        set.len(),
        dir.display(),
        fx.test_accuracy
    );
    Ok(Status::Ok)
}
