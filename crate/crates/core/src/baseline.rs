//! Single-autoencoder baselines on flattened windows.
//!
//! The network and training regime are those of the first TSAE stage; with
//! the same [`TrainConfig`] the trained network is identical to TSAE's AE1.
//! Scores come in two units: the whole window (AE-w) or only its final
//! instant (AE-i).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::sq_dist;
use crate::nn::{DenseNet, Workspace};
use crate::preprocess::WindowSeries;
use crate::train::EpochLoss;
use crate::tsae::{train_stage1, TrainConfig};

const SCORE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ScoreUnit {
    /// `||W_t - W'_t||^2` over the whole window (AE-w).
    #[cfg_attr(feature = "serde", serde(rename = "window"))]
    Window,
    /// `||x_t - x'_t||^2` at the final instant (AE-i).
    #[cfg_attr(feature = "serde", serde(rename = "instant"))]
    Instant,
}

/// Hidden-layer ratios of the symmetric 1, 3 and 5 mid-layer configurations.
pub fn mid_layer_ratios(mid_layers: usize) -> Result<Vec<f64>> {
    match mid_layers {
        1 => Ok(vec![0.5]),
        3 => Ok(vec![0.5, 0.25, 0.5]),
        5 => Ok(vec![0.5, 0.25, 0.125, 0.25, 0.5]),
        n => Err(Error::InvalidParam(alloc::format!(
            "supported mid-layer counts are 1, 3 and 5, got {n}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineAe {
    pub net: DenseNet,
    pub window_len: usize,
    pub dim: usize,
}

/// Train a window autoencoder with the AE1 regime of `cfg`.
pub fn train_ae(windows: &WindowSeries<'_>, cfg: &TrainConfig) -> Result<(BaselineAe, Vec<EpochLoss>)> {
    let split = cfg.split(windows.count())?;
    let (net, log) = train_stage1(windows, &split, cfg)?;
    Ok((
        BaselineAe {
            net,
            window_len: windows.window_len(),
            dim: windows.dim(),
        },
        log,
    ))
}

impl BaselineAe {
    pub fn validate(&self) -> Result<()> {
        let width = self.dim * self.window_len;
        check_len("AE input width", width, self.net.input_dim())?;
        check_len("AE output width", width, self.net.output_dim())
    }

    pub fn mid_layers(&self) -> usize {
        self.net.layer_dims().len() - 2
    }

    /// AE-w score of one flattened window.
    pub fn score_window(&self, window: &[f64]) -> Result<f64> {
        let out = self.net.forward_row(window)?;
        Ok(sq_dist(window, &out))
    }

    /// AE-i score of one flattened window.
    pub fn score_instant(&self, window: &[f64]) -> Result<f64> {
        let out = self.net.forward_row(window)?;
        let tail = window.len() - self.dim;
        Ok(sq_dist(&window[tail..], &out[tail..]))
    }

    pub fn score(&self, window: &[f64], unit: ScoreUnit) -> Result<f64> {
        match unit {
            ScoreUnit::Window => self.score_window(window),
            ScoreUnit::Instant => self.score_instant(window),
        }
    }

    /// Batched scores; equal to the per-window functions.
    pub fn score_windows(&self, windows: &WindowSeries<'_>, unit: ScoreUnit) -> Result<Vec<f64>> {
        check_len("signal count", self.dim, windows.dim())?;
        check_len("window length", self.window_len, windows.window_len())?;
        let width = windows.width();
        let tail = width - self.dim;
        let n = windows.count();
        let mut ws = Workspace::new(&self.net, SCORE_CHUNK);
        let mut buf = Vec::with_capacity(SCORE_CHUNK * width);
        let mut scores = Vec::with_capacity(n);
        for start in (0..n).step_by(SCORE_CHUNK) {
            let end = (start + SCORE_CHUNK).min(n);
            buf.clear();
            for i in start..end {
                buf.extend_from_slice(windows.window(i));
            }
            self.net.forward_ws(&buf, end - start, &mut ws);
            let out = ws.output(end - start);
            for j in 0..end - start {
                let x = &buf[j * width..(j + 1) * width];
                let y = &out[j * width..(j + 1) * width];
                scores.push(match unit {
                    ScoreUnit::Window => sq_dist(x, y),
                    ScoreUnit::Instant => sq_dist(&x[tail..], &y[tail..]),
                });
            }
        }
        Ok(scores)
    }
}
