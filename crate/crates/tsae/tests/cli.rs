use std::path::Path;
use std::process::{Command, Output};

fn tsae(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsae"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = tsae(args, cwd);
    assert!(
        out.status.success(),
        "tsae {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SPEC: &str = r#"
m = 5
t_train = 1200
t_test = 600
n_long = 2
n_short = 2
long_smoothing = 30
seed = 7

[[anomalies]]
kind = "mean-shift"
signals = [0, 1]
start = 200
duration = 40
magnitude = 3.0

[[anomalies]]
kind = "correlation-break"
signals = [3]
start = 450
duration = 40
magnitude = 2.0
"#;

const CONFIG: &str = r#"
seed = 3
output_dir = "run"

[data]
train = "data/train.csv"
test = "data/test.csv"
exclude = ["s04"]

[preprocess]
q = 2
window = 6

[train]
epochs_ae1 = 3
epochs_ae2 = 2
lr_ae1 = 0.01
lr_ae2 = 0.01
batch_size = 16

[sweep]
rates = [2]
windows = [4, 6]
n_repeats = 1
"#;

fn f1_of(report: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(report).unwrap();
    v["adjusted"]["f1"].as_f64().unwrap()
}

#[test]
fn synth_train_detect_eval_report_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("spec.toml"), SPEC).unwrap();
    std::fs::write(d.join("exp.toml"), CONFIG).unwrap();

    ok(&["synth", "spec.toml", "-o", "data"], d);
    let train_csv = std::fs::read_to_string(d.join("data/train.csv")).unwrap();
    assert!(train_csv.starts_with("s00,s01,s02,s03,s04\n"));
    assert_eq!(train_csv.lines().count(), 1201);

    let model = ok(&["train", "-c", "exp.toml"], d);
    assert_eq!(model.trim(), Path::new("run").join("model.json").to_str().unwrap());
    let log = std::fs::read_to_string(d.join("run/train_log.csv")).unwrap();
    assert!(log.starts_with("stage,epoch,train_loss,val_loss\nae1,1,"));
    assert_eq!(log.lines().count(), 1 + 3 + 2);
    let model_json = std::fs::read_to_string(d.join("run/model.json")).unwrap();
    assert!(model_json.contains("\"excluded\": [\n      \"s04\"\n    ]"));

    ok(&["detect", "-m", "run/model.json", "-d", "data/test.csv", "-t", "sweep", "-o", "det"], d);
    let scores = std::fs::read_to_string(d.join("det/scores.csv")).unwrap();
    assert!(scores.starts_with("t,score,label\n5,"));
    assert_eq!(scores.lines().count(), 1 + 300 - 6 + 1);
    let detect_report = std::fs::read_to_string(d.join("det/report.json")).unwrap();

    ok(
        &["eval", "-s", "det/scores.csv", "--truth", "det/truth.csv", "-o", "eval.json", "--curve", "curve.csv"],
        d,
    );
    let eval_report = std::fs::read_to_string(d.join("eval.json")).unwrap();
    assert_eq!(f1_of(&eval_report), f1_of(&detect_report));
    let v: serde_json::Value = serde_json::from_str(&eval_report).unwrap();
    assert_eq!(v["threshold_mode"], "sweep");
    assert_eq!(v["n_points"], 295);
    assert_eq!(v["segments"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(d.join("curve.csv")).unwrap().starts_with("threshold,precision,recall,f1\n"));

    ok(&["report", "-m", "run/model.json", "-d", "data/train.csv", "-o", "rep"], d);
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(rep["networks"][0]["layer_dims"], serde_json::json!([24, 12, 24]));
    assert_eq!(rep["networks"][1]["layer_dims"], serde_json::json!([4, 1, 4]));
    assert!(rep["correlation"]["mean_abs"].as_f64().unwrap() <= 1.0);
    let corr = std::fs::read_to_string(d.join("rep/correlation.csv")).unwrap();
    assert!(corr.starts_with("signal,dev_s00,dev_s01,dev_s02,dev_s03\nout_s00,"));

    // A one-point rate grid reproduces train + detect.
    ok(&["sweep", "-c", "exp.toml", "--param", "rate,window", "-o", "sw"], d);
    let sweep = std::fs::read_to_string(d.join("sw/sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "param,value,seed,precision,recall,f1");
    assert_eq!(rows.len(), 1 + 1 + 2);
    let rate_f1: f64 = rows[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(rows[1].starts_with("rate,2,mean,"));
    assert_eq!(rate_f1, f1_of(&detect_report));
    let runs = std::fs::read_to_string(d.join("sw/sweep_runs.csv")).unwrap();
    assert!(runs.lines().nth(1).unwrap().starts_with("rate,2,3,"));
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), CONFIG).unwrap();
    let out = tsae(&["train", "-c", "exp.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.csv"));

    std::fs::write(d.join("spec.toml"), SPEC).unwrap();
    ok(&["synth", "spec.toml", "-o", "data"], d);
    ok(&["train", "-c", "exp.toml", "--set", "model=ae-i"], d);
    let unlabeled: String = std::fs::read_to_string(d.join("data/test.csv"))
        .unwrap()
        .lines()
        .map(|l| format!("{}\n", l.rsplit_once(',').unwrap().0))
        .collect();
    std::fs::write(d.join("unlabeled.csv"), unlabeled).unwrap();
    let out = tsae(&["detect", "-m", "run/model.json", "-d", "unlabeled.csv", "-t", "sweep"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("labeled"));
    ok(&["detect", "-m", "run/model.json", "-d", "unlabeled.csv", "-t", "0.5", "-o", "det"], d);
    assert!(!d.join("det/truth.csv").exists());

    let bad_spec = SPEC.replace("start = 450", "start = 590");
    std::fs::write(d.join("bad.toml"), bad_spec).unwrap();
    assert!(!tsae(&["synth", "bad.toml"], d).status.success());
    assert!(!tsae(&["train", "-c", "exp.toml", "--set", "preprocess.window=0"], d).status.success());
    assert!(!tsae(&["detect", "-m", "missing.json", "-d", "unlabeled.csv", "-t", "1"], d).status.success());
}
