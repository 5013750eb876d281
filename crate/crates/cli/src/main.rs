//! `xaieval`: score feature attributions from the command line.

mod commands;
mod load;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xaieval_core::Error;

#[derive(Parser, Debug)]
#[command(name = "xaieval", version, about = "Evaluate feature-attribution explanations")]
struct Cli {
    /// Also print informational notes, not just cautions.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute attributions and write them as a QTEN tensor.
    Explain(ExplainArgs),
    /// Score explainers with a set of metrics and write a report.
    Evaluate(EvaluateArgs),
    /// Re-run an evaluation for several values of one hyperparameter.
    Sensitivity(SensitivityArgs),
    /// Recompute the category ranking of an existing report.
    Rank(RankArgs),
    /// Write the bundled synthetic dataset and trained toy model.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Model file (qnn-v1 JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Inputs as a QTEN tensor of shape [n, ...].
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Labels as a QTEN tensor of shape [n].
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: String,
    #[arg(long, default_value = "attributions.qten")]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    ig_steps: usize,
    /// Reference input for integrated gradients and gradient SHAP.
    #[arg(long, default_value = "black")]
    baseline: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fixed attributions, as PATH or NAME=PATH. Repeatable.
    #[arg(long = "attributions", value_name = "A")]
    attributions: Vec<String>,
    /// Explanation method to run. Repeatable.
    #[arg(long = "method", value_name = "NAME")]
    methods: Vec<String>,
    /// Comma-separated metric names, or `all`.
    #[arg(long)]
    metrics: Option<String>,
    /// Ground-truth masks as a u32 QTEN tensor shaped like the inputs.
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Plan or report JSON to start from.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, as metrics.<metric>.<param>=VALUE or
    /// explainers.<name>.<field>=VALUE. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate only the first N samples.
    #[arg(long)]
    sample_limit: Option<usize>,
    /// Report path; CSV tables are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// metrics.<metric>.<param> or explainers.<name>.<field>
    #[arg(long)]
    param: String,
    /// Comma-separated values to try.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[command(flatten)]
    eval: EvaluateArgs,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of held-out samples to write (at most 200).
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Usage = 1,
    Input = 2,
    Numerical = 3,
}

fn status_for(err: &Error) -> Status {
    match err {
        Error::PlanValidation(_)
        | Error::UnknownParamPath(_)
        | Error::TypeIncompatibleValue { .. }
        | Error::InvalidParameter(_)
        | Error::FewerThanTwoExplainers(_)
        | Error::KTooLarge { .. }
        | Error::InvalidPatchSize(_) => Status::Usage,
        e if e.is_numerical() => Status::Numerical,
        _ => Status::Input,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Status::Usage } else { Status::Ok };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Explain(a) => commands::explain(a),
        Command::Evaluate(a) => commands::evaluate(a, verbose),
        Command::Sensitivity(a) => commands::sensitivity(a, verbose),
        Command::Rank(a) => commands::rank(a),
        Command::Fixture(a) => commands::fixture(a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(status_for(&e) as u8)
        }
    }
}
