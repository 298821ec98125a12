//! The command implementations behind the `tsae` binary.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsae_core::eval::{curve_points, sweep_curve, EvalReport};
use tsae_core::synth::{generate, SyntheticSpec};

use crate::bundle::ModelFile;
use crate::config::{preset, ExperimentConfig};
use crate::error::{io_err, Error, Result};
use crate::experiments::{mean_rows, model_report, run_rows, run_sweep, SweepParam, SWEEP_HEADER};
use crate::io::{read_labels, read_scores, write_dataset, write_labels, write_matrix, write_rows, write_scores, write_text};
use crate::pipeline::{choose, detect, load_data, read_for_model, train, train_log_rows, Threshold};

/// Evaluation output: the report plus how its threshold was picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFile {
    /// `fixed` or `sweep`.
    pub threshold_mode: String,
    pub config_hash: Option<String>,
    #[serde(flatten)]
    pub report: EvalReport,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn mode(t: Threshold) -> String {
    match t {
        Threshold::Fixed(_) => "fixed".into(),
        Threshold::Sweep => "sweep".into(),
    }
}

/// Configuration from an optional file and preset, with overrides.
pub fn resolve_config(path: Option<&Path>, preset_name: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig> {
    match (path, preset_name) {
        (Some(p), None) => ExperimentConfig::load(p, overrides),
        (Some(_), Some(_)) => Err(Error::Config("give either --config or --preset, not both".into())),
        (None, name) => preset(name.unwrap_or("default"))?.with_overrides(overrides),
    }
}

/// Write `train.csv` and `test.csv` for a synthetic spec.
pub fn synth(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).map_err(io_err(spec_path))?;
    let mut spec: SyntheticSpec = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", spec_path.display())))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (tr, te) = generate(&spec)?;
    write_dataset(&out.join("train.csv"), &tr)?;
    write_dataset(&out.join("test.csv"), &te)?;
    log::info!("wrote {} + {} rows of {} signals to {}", tr.len(), te.len(), tr.dim(), out.display());
    Ok(())
}

/// Train on the configured data; writes `model.json`, `train_log.csv` and `config.toml`.
pub fn train_cmd(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let data = load_data(cfg)?;
    let (model, log) = train(&data.train, &data.excluded, cfg, cfg.seed)?;
    let out = &cfg.output_dir;
    let model_path = out.join("model.json");
    model.save(&model_path)?;
    write_rows(&out.join("train_log.csv"), &["stage", "epoch", "train_loss", "val_loss"], &train_log_rows(&log))?;
    write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    log::info!("model written to {}", model_path.display());
    Ok(model_path)
}

/// Score `data` with a saved model; writes `scores.csv`, and with labels
/// also `truth.csv` and `report.json`.
pub fn detect_cmd(model_path: &Path, data_path: &Path, threshold: Threshold, label_column: Option<String>, out: &Path) -> Result<Option<EvalFile>> {
    let model = ModelFile::load(model_path)?;
    let data = read_for_model(data_path, &model, label_column)?;
    let det = detect(&model, &data, threshold)?;
    write_scores(&out.join("scores.csv"), &det.scores)?;
    let Some(truth) = &det.truth else {
        return Ok(None);
    };
    write_labels(&out.join("truth.csv"), &det.scores.t, truth)?;
    let file = EvalFile {
        threshold_mode: mode(threshold),
        config_hash: model.config_hash.clone(),
        report: det.report.expect("labeled data is evaluated"),
    };
    write_text(&out.join("report.json"), &json(&file))?;
    Ok(Some(file))
}

/// Evaluate a scores file against a `t,label` truth file matched on `t`.
pub fn eval_cmd(scores_path: &Path, truth_path: &Path, threshold: Threshold, out: &Path, curve: Option<&Path>) -> Result<EvalFile> {
    let scores = read_scores(scores_path)?;
    let (t, labels) = read_labels(truth_path)?;
    let by_t: HashMap<usize, u8> = t.into_iter().zip(labels).collect();
    let truth: Vec<u8> = scores
        .t
        .iter()
        .map(|ti| {
            by_t.get(ti).copied().ok_or_else(|| Error::Format {
                path: truth_path.to_path_buf(),
                msg: format!("no label for t = {ti}"),
            })
        })
        .collect::<Result<_>>()?;
    let (_, report) = choose(&scores.score, Some(&truth), threshold)?;
    let file = EvalFile {
        threshold_mode: mode(threshold),
        config_hash: None,
        report: report.expect("truth given"),
    };
    write_text(out, &json(&file))?;
    if let Some(c) = curve {
        let points = curve_points(&sweep_curve(&scores.score, &truth)?);
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| vec![p.threshold.to_string(), p.precision.to_string(), p.recall.to_string(), p.f1.to_string()])
            .collect();
        write_rows(c, &["threshold", "precision", "recall", "f1"], &rows)?;
    }
    Ok(file)
}

/// Run the grids; writes `sweep.csv` (means) and `sweep_runs.csv` (every run).
pub fn sweep_cmd(cfg: &ExperimentConfig, params: &[SweepParam]) -> Result<PathBuf> {
    let data = load_data(cfg)?;
    let runs = run_sweep(cfg, params, &data)?;
    let out = &cfg.output_dir;
    write_rows(&out.join("sweep_runs.csv"), &SWEEP_HEADER, &run_rows(&runs))?;
    let path = out.join("sweep.csv");
    write_rows(&path, &SWEEP_HEADER, &mean_rows(&runs))?;
    write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    Ok(path)
}

/// Model size report and, given data, the correlation matrix between the
/// window network's outputs and the deviations from them.
pub fn report_cmd(model_path: &Path, data_path: Option<&Path>, out: &Path) -> Result<()> {
    let model = ModelFile::load(model_path)?;
    let data = match data_path {
        Some(p) => Some(read_for_model(p, &model, None)?),
        None => None,
    };
    let (report, matrix) = model_report(&model, data.as_ref())?;
    if let Some(m) = matrix {
        let rows: Vec<String> = model.pipeline.columns.iter().map(|c| format!("out_{c}")).collect();
        let cols: Vec<String> = model.pipeline.columns.iter().map(|c| format!("dev_{c}")).collect();
        write_matrix(&out.join("correlation.csv"), "signal", &rows, &cols, &m)?;
    }
    write_text(&out.join("report.json"), &json(&report))
}
