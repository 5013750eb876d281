use std::path::{Path, PathBuf};
use std::process::Command;

use xaieval_core::io::{read_qtensor, read_report, write_qtensor, DType};
use xaieval_core::Tensor;

fn xaieval(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_xaieval"))
        .args(args)
        .env("XAIEVAL_THREADS", "2")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

struct Files {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Files {
    fn new(samples: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let n = samples.to_string();
        let (code, err) = xaieval(&["fixture", "--out", root.to_str().unwrap(), "--samples", &n]);
        assert_eq!(code, 0, "{err}");
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }

    fn data(&self) -> Vec<String> {
        vec![
            "--model".into(),
            self.path("model.json"),
            "--inputs".into(),
            self.path("inputs.qten"),
            "--labels".into(),
            self.path("labels.qten"),
        ]
    }

    fn evaluate(&self, extra: &[&str]) -> (i32, String) {
        let mut args = vec!["evaluate".to_string()];
        args.extend(self.data());
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        xaieval(&refs)
    }
}

#[test]
fn fixture_files_have_matching_shapes() {
    let f = Files::new(20);
    let inputs = read_qtensor(f.path("inputs.qten")).unwrap();
    let labels = read_qtensor(f.path("labels.qten")).unwrap();
    let masks = read_qtensor(f.path("masks.qten")).unwrap();
    assert_eq!(inputs.shape(), &[20, 1, 8, 8]);
    assert_eq!(labels.shape(), &[20]);
    assert_eq!(masks.shape(), inputs.shape());
    assert_eq!(masks.data().iter().filter(|&&m| m == 1.0).count(), 20 * 9);
}

#[test]
fn full_run_writes_report_and_tables() {
    let f = Files::new(30);
    let out = f.path("run/report.json");
    let (code, err) = f.evaluate(&[
        "--masks", &f.path("masks.qten"),
        "--method", "saliency",
        "--method", "integrated_gradients",
        "--metrics", "all",
        "--out", &out,
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("caution[default_hyperparameters]"));
    let report = read_report(Path::new(&out)).unwrap();
    assert_eq!(report.meta.plan.metrics.len(), 22);
    let ranking = std::fs::read_to_string(f.path("run/report.ranking.csv")).unwrap();
    let lines: Vec<&str> = ranking.lines().collect();
    assert_eq!(lines[0], "category,explainer,score");
    assert_eq!(lines.len(), 1 + 12);
    for line in &lines[1..] {
        let score: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }
    let table = std::fs::read_to_string(f.path("run/report.sparseness.csv")).unwrap();
    assert!(table.starts_with("sample_index,saliency,integrated_gradients\n0,"));
    assert_eq!(table.lines().count(), 31);

    let again = f.path("rank.csv");
    let (code, err) = xaieval(&["rank", "--report", &out, "--out", &again]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_to_string(again).unwrap(), ranking);
}

#[test]
fn explain_matches_in_engine_attributions() {
    let f = Files::new(10);
    let mut args = vec!["explain".to_string()];
    args.extend(f.data());
    args.extend(["--method", "gradient_shap", "--seed", "4", "--out"].map(String::from));
    args.push(f.path("shap.qten"));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, err) = xaieval(&refs);
    assert_eq!(code, 0, "{err}");
    let a = read_qtensor(f.path("shap.qten")).unwrap();
    assert_eq!(a.shape(), &[10, 1, 8, 8]);

    let fixed = f.path("fixed.json");
    let (code, err) = f.evaluate(&["--attributions", &format!("gradient_shap={}", f.path("shap.qten")), "--metrics", "sparseness", "--seed", "4", "--out", &fixed]);
    assert_eq!(code, 0, "{err}");
    let live = f.path("live.json");
    let (code, err) = f.evaluate(&["--method", "gradient_shap", "--metrics", "sparseness", "--seed", "4", "--out", &live]);
    assert_eq!(code, 0, "{err}");
    let x = read_report(Path::new(&fixed)).unwrap();
    let y = read_report(Path::new(&live)).unwrap();
    assert_eq!(x.results[0].per_sample, y.results[0].per_sample);
}

#[test]
fn usage_errors_exit_one() {
    let f = Files::new(5);
    let out = f.path("r.json");
    let (code, err) = f.evaluate(&["--method", "saliency", "--metrics", "pixel_magic", "--out", &out]);
    assert_eq!(code, 1);
    assert!(err.contains("sparseness") && err.contains("perturbation_curve"), "{err}");

    let (code, err) = f.evaluate(&["--method", "saliency", "--metrics", "all", "--out", &out]);
    assert_eq!(code, 1);
    assert!(err.contains("masks") && err.contains("pointing_game"), "{err}");

    let (code, _) = f.evaluate(&["--method", "saliency", "--metrics", "sparseness", "--set", "metrics.sparseness.colour=red", "--out", &out]);
    assert_eq!(code, 1);
    let (code, _) = f.evaluate(&["--method", "saliency", "--metrics", "top_k_intersection", "--set", "metrics.top_k_intersection.k=many", "--out", &out]);
    assert_eq!(code, 1);
    let (code, _) = xaieval(&["evaluate", "--bogus"]);
    assert_eq!(code, 1);
    assert!(!Path::new(&out).exists());
}

#[test]
fn bad_files_exit_two() {
    let f = Files::new(5);
    std::fs::write(f.path("junk.qten"), b"NOPE1234").unwrap();
    let (code, err) = xaieval(&[
        "evaluate", "--model", &f.path("model.json"), "--inputs", &f.path("junk.qten"),
        "--labels", &f.path("labels.qten"), "--method", "saliency", "--metrics", "sparseness",
        "--out", &f.path("r.json"),
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("BadMagic"), "{err}");
    let (code, _) = xaieval(&["rank", "--report", &f.path("missing.json"), "--out", &f.path("x.csv")]);
    assert_eq!(code, 2);
}

#[test]
fn all_numerical_failures_exit_three() {
    let f = Files::new(5);
    let zeros = Tensor::zeros(vec![5, 1, 8, 8]).unwrap();
    write_qtensor(&zeros, DType::F64, f.path("zeros.qten")).unwrap();
    let out = f.path("r.json");
    let (code, err) = f.evaluate(&["--attributions", &f.path("zeros.qten"), "--metrics", "sparseness", "--out", &out]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("sparseness/zeros"), "{err}");
    assert!(Path::new(&out).exists());
}

#[test]
fn verbose_shows_info_notes() {
    let f = Files::new(5);
    let out = f.path("r.json");
    let (_, quiet) = f.evaluate(&["--method", "saliency", "--metrics", "sparseness", "--out", &out]);
    let (_, loud) = f.evaluate(&["-v", "--method", "saliency", "--metrics", "sparseness", "--out", &out]);
    assert!(!quiet.contains("info["));
    assert!(loud.contains("info[ranking_skipped]"), "{loud}");
}
