//! Train and detect end to end: exclude, scale with training factors,
//! decimate, window, then fit or score.
//!
//! Detection only ever uses the scaling stored in the model file.

use std::path::Path;
use std::str::FromStr;

use tsae_core::baseline::{train_ae, ScoreUnit};
use tsae_core::eval::{align_truth, best_f1_sweep, evaluate, EvalReport};
use tsae_core::preprocess::{apply_minmax, decimate, exclude_signals, fit_minmax, make_windows, TimeSeriesMatrix};
use tsae_core::synth::generate;
use tsae_core::tsae::{threshold_scores, train_tsae, TrainConfig, TrainLog};

use crate::bundle::{ModelFile, PipelineSpec, TrainedModel};
use crate::config::{ExperimentConfig, ModelKind};
use crate::error::{Error, Result};
use crate::io::{read_dataset, resolve_columns, CsvOptions, ScoreTable};

/// Training data, optional test data and the signals dropped from both.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: TimeSeriesMatrix,
    pub test: Option<TimeSeriesMatrix>,
    pub excluded: Vec<String>,
}

/// Drop `requested` signals from in-memory data, resolving names like the CSV reader.
pub fn exclude_columns(data: &TimeSeriesMatrix, requested: &[String]) -> Result<(TimeSeriesMatrix, Vec<String>)> {
    let idx = resolve_columns(data.column_names(), requested).map_err(Error::Config)?;
    let names: Vec<String> = idx.iter().map(|&i| data.column_names()[i].clone()).collect();
    Ok((exclude_signals(data, &names)?, names))
}

/// Load the configured data source with exclusions applied.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    let d = &cfg.data;
    if let Some(spec) = &d.synthetic {
        let (train, test) = generate(spec)?;
        let (train, excluded) = exclude_columns(&train, &d.exclude)?;
        let (test, _) = exclude_columns(&test, &excluded)?;
        return Ok(Dataset {
            train,
            test: Some(test),
            excluded,
        });
    }
    let train_path = d.train.as_deref().ok_or_else(|| Error::Config("data.train is not set".into()))?;
    let opts = CsvOptions {
        label_column: d.label_column.clone(),
        exclude: d.exclude.clone(),
    };
    let (train, info) = read_dataset(train_path, &opts)?;
    let test = match &d.test {
        Some(p) => Some(read_test(p, &opts, &info.excluded, train.column_names())?),
        None => None,
    };
    Ok(Dataset {
        train,
        test,
        excluded: info.excluded,
    })
}

fn read_test(path: &Path, opts: &CsvOptions, excluded: &[String], columns: &[String]) -> Result<TimeSeriesMatrix> {
    let opts = CsvOptions {
        label_column: opts.label_column.clone(),
        exclude: excluded.to_vec(),
    };
    let (test, _) = read_dataset(path, &opts)?;
    if test.column_names() != columns {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "signal columns differ from the training data".into(),
        });
    }
    Ok(test)
}

/// Read a CSV to be scored by `model`, dropping the model's excluded signals.
pub fn read_for_model(path: &Path, model: &ModelFile, label_column: Option<String>) -> Result<TimeSeriesMatrix> {
    let opts = CsvOptions {
        label_column,
        exclude: Vec::new(),
    };
    read_test(path, &opts, &model.pipeline.excluded, &model.pipeline.columns)
}

impl PipelineSpec {
    /// Fit scaling on `train` (exclusions already applied).
    pub fn fit(train: &TimeSeriesMatrix, excluded: Vec<String>, q: usize, window_len: usize) -> Result<Self> {
        Ok(Self {
            columns: train.column_names().to_vec(),
            excluded,
            q,
            window_len,
            scaling: fit_minmax(train)?,
        })
    }

    /// Scale with the stored factors, then decimate.
    pub fn transform(&self, data: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
        if data.column_names() != self.columns.as_slice() {
            return Err(Error::Config(format!(
                "data has {} signals {:?}..., model expects {} {:?}...",
                data.dim(),
                data.column_names().iter().take(3).collect::<Vec<_>>(),
                self.columns.len(),
                self.columns.iter().take(3).collect::<Vec<_>>()
            )));
        }
        Ok(decimate(&apply_minmax(&self.scaling, data)?, self.q)?)
    }
}

pub fn train_model(kind: ModelKind, data: &TimeSeriesMatrix, window_len: usize, cfg: &TrainConfig) -> Result<(TrainedModel, TrainLog)> {
    let windows = make_windows(data.values(), window_len, 1)?;
    Ok(match kind {
        ModelKind::Tsae => {
            let (m, log) = train_tsae(&windows, cfg)?;
            (TrainedModel::Tsae(m), log)
        }
        ModelKind::AeWindow | ModelKind::AeInstant => {
            let unit = if kind == ModelKind::AeWindow {
                ScoreUnit::Window
            } else {
                ScoreUnit::Instant
            };
            let (ae, ae1) = train_ae(&windows, cfg)?;
            (TrainedModel::Ae { unit, ae }, TrainLog { ae1, ae2: Vec::new() })
        }
    })
}

/// Fit the pipeline on `train` and train the configured model with `seed`.
pub fn train(train: &TimeSeriesMatrix, excluded: &[String], cfg: &ExperimentConfig, seed: u64) -> Result<(ModelFile, TrainLog)> {
    let pipeline = PipelineSpec::fit(train, excluded.to_vec(), cfg.preprocess.q, cfg.preprocess.window)?;
    let prepared = pipeline.transform(train)?;
    let tc = cfg.train_config(seed);
    log::info!(
        "training {} on {} x {} (q={}, K={}, seed={})",
        cfg.model.name(),
        prepared.len(),
        prepared.dim(),
        pipeline.q,
        pipeline.window_len,
        seed
    );
    let (model, log) = train_model(cfg.model, &prepared, cfg.preprocess.window, &tc)?;
    Ok((ModelFile::new(model, pipeline, tc, Some(cfg.hash())), log))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Best point-adjusted F1 against the labels.
    Sweep,
}

impl FromStr for Threshold {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim() == "sweep" {
            return Ok(Threshold::Sweep);
        }
        match s.trim().parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(Threshold::Fixed(v)),
            _ => Err(format!("threshold must be a number or 'sweep', got '{s}'")),
        }
    }
}

/// Scores, alarms and, with labels, the evaluation.
#[derive(Debug, Clone)]
pub struct Detection {
    /// `t` indexes the decimated series at each window's final instant;
    /// `label` is the alarm at the chosen threshold.
    pub scores: ScoreTable,
    /// Ground truth at the same instants.
    pub truth: Option<Vec<u8>>,
    pub threshold: f64,
    pub report: Option<EvalReport>,
}

/// Threshold from `threshold`, or the best-F1 threshold when sweeping.
pub fn choose(scores: &[f64], truth: Option<&[u8]>, threshold: Threshold) -> Result<(f64, Option<EvalReport>)> {
    Ok(match (threshold, truth) {
        (Threshold::Sweep, None) => {
            return Err(Error::Config("threshold 'sweep' needs labeled test data".into()));
        }
        (Threshold::Sweep, Some(t)) => {
            let (l, r) = best_f1_sweep(scores, t)?;
            (l, Some(r))
        }
        (Threshold::Fixed(l), Some(t)) => (l, Some(evaluate(scores, t, l)?)),
        (Threshold::Fixed(l), None) => (l, None),
    })
}

pub fn detect(model: &ModelFile, data: &TimeSeriesMatrix, threshold: Threshold) -> Result<Detection> {
    let prepared = model.pipeline.transform(data)?;
    let k = model.pipeline.window_len;
    let windows = make_windows(prepared.values(), k, 1)?;
    let scores = model.model.score_windows(&windows)?;
    let truth = match prepared.labels() {
        Some(l) => Some(align_truth(l, k)?.to_vec()),
        None => None,
    };
    let (threshold, report) = choose(&scores, truth.as_deref(), threshold)?;
    let label = threshold_scores(&scores, threshold);
    let t = (0..scores.len()).map(|i| windows.end_instant(i)).collect();
    Ok(Detection {
        scores: ScoreTable { t, score: scores, label },
        truth,
        threshold,
        report,
    })
}

/// `stage,epoch,train_loss,val_loss` rows.
pub fn train_log_rows(log: &TrainLog) -> Vec<Vec<String>> {
    let stages = [("ae1", &log.ae1), ("ae2", &log.ae2)];
    stages
        .iter()
        .flat_map(|(name, l)| {
            l.iter().map(move |e| {
                vec![
                    name.to_string(),
                    e.epoch.to_string(),
                    e.train_loss.to_string(),
                    e.val_loss.map(|v| v.to_string()).unwrap_or_default(),
                ]
            })
        })
        .collect()
}
