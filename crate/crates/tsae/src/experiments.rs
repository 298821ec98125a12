//! Parameter sweeps and the correlation/size report.

use serde::Serialize;
use tsae_core::eval::Metrics;
use tsae_core::nn::ParamCount;
use tsae_core::preprocess::{make_windows, TimeSeriesMatrix};
use tsae_core::synth::correlation_separation_check;
use tsae_core::tsae::stage1_outputs;
use tsae_core::Matrix;

use crate::bundle::{ModelFile, TrainedModel};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::pipeline::{detect, train, Dataset, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rate,
    Window,
    Nodes,
}

impl SweepParam {
    pub const ALL: [SweepParam; 3] = [SweepParam::Rate, SweepParam::Window, SweepParam::Nodes];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rate => "rate",
            SweepParam::Window => "window",
            SweepParam::Nodes => "nodes",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown sweep parameter '{s}' (rate, window, nodes)"))
    }
}

/// One grid point: its label and the configuration it runs with.
pub fn grid(base: &ExperimentConfig, param: SweepParam) -> Vec<(String, ExperimentConfig)> {
    let with = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    match param {
        SweepParam::Rate => base.sweep.rates.iter().map(|&q| (q.to_string(), with(&|c| c.preprocess.q = q))).collect(),
        SweepParam::Window => base
            .sweep
            .windows
            .iter()
            .map(|&k| (k.to_string(), with(&|c| c.preprocess.window = k)))
            .collect(),
        SweepParam::Nodes => base
            .sweep
            .node_pairs
            .iter()
            .map(|&(a, b)| {
                let cfg = with(&|c| {
                    c.train.ae1_hidden_ratios = vec![a];
                    c.train.ae2_hidden_ratio = b;
                });
                (format!("{a}:{b}"), cfg)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub param: &'static str,
    pub value: String,
    pub seed: u64,
    /// Point-adjusted metrics at the best-F1 threshold.
    pub metrics: Metrics,
}

/// Seeds `base.seed, base.seed + 1, ...`, one per repeat.
pub fn seed_schedule(base: &ExperimentConfig) -> Vec<u64> {
    (0..base.sweep.n_repeats as u64).map(|r| base.seed.wrapping_add(r)).collect()
}

/// Train and evaluate one model per grid point and seed.
pub fn run_sweep(base: &ExperimentConfig, params: &[SweepParam], data: &Dataset) -> Result<Vec<SweepRun>> {
    let test = data
        .test
        .as_ref()
        .filter(|t| t.labels().is_some())
        .ok_or_else(|| Error::Config("sweeps need labeled test data".into()))?;
    let mut runs = Vec::new();
    for &p in params {
        let points = grid(base, p);
        if points.is_empty() {
            return Err(Error::Config(format!("sweep grid for {} is empty", p.name())));
        }
        for (value, cfg) in points {
            cfg.validate()?;
            for seed in seed_schedule(base) {
                let (model, _) = train(&data.train, &data.excluded, &cfg, seed)?;
                let det = detect(&model, test, Threshold::Sweep)?;
                let metrics = det.report.expect("labeled").adjusted;
                log::info!("{}={value} seed={seed}: F1 {:.4}", p.name(), metrics.f1);
                runs.push(SweepRun {
                    param: p.name(),
                    value: value.clone(),
                    seed,
                    metrics,
                });
            }
        }
    }
    Ok(runs)
}

pub const SWEEP_HEADER: [&str; 6] = ["param", "value", "seed", "precision", "recall", "f1"];

/// One row per run.
pub fn run_rows(runs: &[SweepRun]) -> Vec<Vec<String>> {
    runs.iter()
        .map(|r| {
            vec![
                r.param.to_string(),
                r.value.clone(),
                r.seed.to_string(),
                r.metrics.precision.to_string(),
                r.metrics.recall.to_string(),
                r.metrics.f1.to_string(),
            ]
        })
        .collect()
}

/// One row per grid point, metrics averaged over seeds; `seed` is `mean`.
pub fn mean_rows(runs: &[SweepRun]) -> Vec<Vec<String>> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in runs {
        if !keys.contains(&(r.param, r.value.as_str())) {
            keys.push((r.param, &r.value));
        }
    }
    keys.iter()
        .map(|&(p, v)| {
            let group: Vec<&Metrics> = runs.iter().filter(|r| r.param == p && r.value == v).map(|r| &r.metrics).collect();
            let n = group.len() as f64;
            let avg = |f: fn(&Metrics) -> f64| group.iter().map(|m| f(m)).sum::<f64>() / n;
            vec![
                p.to_string(),
                v.to_string(),
                "mean".to_string(),
                avg(|m| m.precision).to_string(),
                avg(|m| m.recall).to_string(),
                avg(|m| m.f1).to_string(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSummary {
    pub n_windows: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub constant_outputs: usize,
    pub constant_deviations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: &'static str,
    pub config_hash: Option<String>,
    pub signals: usize,
    pub window_len: usize,
    pub q: usize,
    /// Per network, in order; AE1 first for TSAE.
    pub networks: Vec<NetworkSize>,
    pub total: ParamCount,
    /// Outputs of the window network vs deviations from them, on the given data.
    pub correlation: Option<CorrelationSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkSize {
    pub layer_dims: Vec<usize>,
    pub params: ParamCount,
}

/// Size report, plus the output/deviation correlation matrix when `data` is given.
pub fn model_report(model: &ModelFile, data: Option<&TimeSeriesMatrix>) -> Result<(ModelReport, Option<Matrix>)> {
    let nets = match &model.model {
        TrainedModel::Tsae(m) => vec![&m.ae1, &m.ae2],
        TrainedModel::Ae { ae, .. } => vec![&ae.net],
    };
    let networks = nets
        .iter()
        .map(|n| NetworkSize {
            layer_dims: n.layer_dims().to_vec(),
            params: n.param_count(),
        })
        .collect();
    let (correlation, matrix) = match data {
        Some(d) => {
            let prepared = model.pipeline.transform(d)?;
            let windows = make_windows(prepared.values(), model.pipeline.window_len, 1)?;
            let (outputs, deviations) = stage1_outputs(nets[0], &windows)?;
            let check = correlation_separation_check(&outputs, &deviations)?;
            let summary = CorrelationSummary {
                n_windows: windows.count(),
                max_abs: check.max_abs,
                mean_abs: check.mean_abs,
                constant_outputs: check.constant_a.iter().filter(|&&c| c).count(),
                constant_deviations: check.constant_b.iter().filter(|&&c| c).count(),
            };
            (Some(summary), Some(check.matrix))
        }
        None => (None, None),
    };
    Ok((
        ModelReport {
            model: model.model.kind_name(),
            config_hash: model.config_hash.clone(),
            signals: model.model.dim(),
            window_len: model.pipeline.window_len,
            q: model.pipeline.q,
            networks,
            total: model.model.param_count(),
            correlation,
        },
        matrix,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(param: &'static str, value: &str, seed: u64, f1: f64) -> SweepRun {
        SweepRun {
            param,
            value: value.into(),
            seed,
            metrics: Metrics {
                f1,
                ..Metrics::from_counts(1, 1, 1)
            },
        }
    }

    #[test]
    fn grids_follow_config() {
        let base = ExperimentConfig::default();
        let rates: Vec<String> = grid(&base, SweepParam::Rate).into_iter().map(|g| g.0).collect();
        assert_eq!(rates, ["1", "5", "10", "20", "50"]);
        let w = grid(&base, SweepParam::Window);
        assert_eq!(w.len(), 5);
        assert_eq!(w[4].1.preprocess.window, 100);
        let n = grid(&base, SweepParam::Nodes);
        assert_eq!(n.len(), 6);
        assert_eq!(n[1].0, "0.5:0.1");
        assert_eq!(n[5].1.train.ae1_hidden_ratios, vec![0.75]);
        assert_eq!(n[5].1.train.ae2_hidden_ratio, 0.2);
        assert_eq!("nodes".parse::<SweepParam>().unwrap(), SweepParam::Nodes);
        assert!("k".parse::<SweepParam>().is_err());
    }

    #[test]
    fn means_group_by_point() {
        let runs = vec![run("rate", "1", 0, 0.5), run("rate", "1", 1, 1.0), run("rate", "5", 0, 0.25)];
        let rows = mean_rows(&runs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][..3], ["rate", "1", "mean"]);
        assert_eq!(rows[0][5], "0.75");
        assert_eq!(rows[1][5], "0.25");
        assert_eq!(run_rows(&runs)[1][2], "1");
    }
}
