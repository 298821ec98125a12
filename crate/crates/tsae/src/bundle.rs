//! Model files: the trained networks together with everything needed to
//! score new data the same way (kept columns, exclusions, scaling, `q`, `K`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use tsae_core::baseline::{BaselineAe, ScoreUnit};
use tsae_core::nn::ParamCount;
use tsae_core::preprocess::{ScalingParams, WindowSeries};
use tsae_core::tsae::{TrainConfig, TsaeModel};

use crate::error::{io_err, Error, Result};

pub const FORMAT: &str = "tsae-model";
pub const FORMAT_VERSION: u32 = 1;

/// Preprocessing fitted on the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    /// Signals fed to the model, in order.
    pub columns: Vec<String>,
    /// Signals dropped before scaling.
    pub excluded: Vec<String>,
    pub q: usize,
    pub window_len: usize,
    pub scaling: ScalingParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TrainedModel {
    Tsae(TsaeModel),
    Ae { unit: ScoreUnit, ae: BaselineAe },
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Tsae(_) => "tsae",
            TrainedModel::Ae { unit: ScoreUnit::Window, .. } => "ae-w",
            TrainedModel::Ae { unit: ScoreUnit::Instant, .. } => "ae-i",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TrainedModel::Tsae(m) => m.validate()?,
            TrainedModel::Ae { ae, .. } => ae.validate()?,
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        match self {
            TrainedModel::Tsae(m) => m.window_len,
            TrainedModel::Ae { ae, .. } => ae.window_len,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::Tsae(m) => m.dim,
            TrainedModel::Ae { ae, .. } => ae.dim,
        }
    }

    /// One score per window.
    pub fn score_windows(&self, windows: &WindowSeries<'_>) -> Result<Vec<f64>> {
        Ok(match self {
            TrainedModel::Tsae(m) => m.score_windows(windows)?,
            TrainedModel::Ae { unit, ae } => ae.score_windows(windows, *unit)?,
        })
    }

    /// Node and edge counts, summed over both networks for TSAE.
    pub fn param_count(&self) -> ParamCount {
        match self {
            TrainedModel::Tsae(m) => {
                let (a, b) = (m.ae1.param_count(), m.ae2.param_count());
                ParamCount {
                    nodes: a.nodes + b.nodes,
                    edges: a.edges + b.edges,
                }
            }
            TrainedModel::Ae { ae, .. } => ae.net.param_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub model: TrainedModel,
    pub pipeline: PipelineSpec,
    pub train_config: TrainConfig,
    /// Hash of the experiment configuration that produced the model.
    pub config_hash: Option<String>,
}

impl ModelFile {
    pub fn new(model: TrainedModel, pipeline: PipelineSpec, train_config: TrainConfig, config_hash: Option<String>) -> Self {
        Self {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            model,
            pipeline,
            train_config,
            config_hash,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.format != FORMAT {
            return Err(format!("not a model file (format '{}')", self.format));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format version {}", self.format_version));
        }
        self.model.validate().map_err(|e| e.to_string())?;
        let p = &self.pipeline;
        if p.columns.len() != self.model.dim() || p.scaling.dim() != p.columns.len() {
            return Err(format!(
                "model expects {} signals but the pipeline lists {} columns and {} scaling entries",
                self.model.dim(),
                p.columns.len(),
                p.scaling.dim()
            ));
        }
        if p.window_len != self.model.window_len() || p.q == 0 {
            return Err("pipeline window length or rate does not match the model".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let m: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|msg| Error::Format {
            path: path.to_path_buf(),
            msg,
        })
    }
}
