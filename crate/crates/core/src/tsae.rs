//! The two-stage autoencoder.
//!
//! `AE1` maps a flattened window `W_t` (length `m * K`) to `W'_t`; its last
//! `m` outputs are `x'_t`. The residual `dx_t = x_t - x'_t` feeds `AE2`, whose
//! output `dx'_t` completes the reconstruction `R_t = x'_t + dx'_t`. The
//! anomaly score is `||x_t - R_t||^2` at the final instant only.
//!
//! Training runs in two strictly separate stages: `AE1` on the windows, then
//! `AE2` on residuals of the frozen `AE1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::nn::{DenseNet, Workspace};
use crate::preprocess::{split_train_val, Split, WindowSeries};
use crate::train::{derive_seed, fit_autoencoder, mean_loss, EpochLoss, FitConfig};

const STREAM_SPLIT: u64 = 1;
const STREAM_AE1_INIT: u64 = 2;
const STREAM_AE1_SHUFFLE: u64 = 3;
const STREAM_AE2_INIT: u64 = 4;
const STREAM_AE2_SHUFFLE: u64 = 5;

/// Rows per forward pass when scoring.
const SCORE_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs_ae1: usize,
    pub epochs_ae2: usize,
    pub lr_ae1: f64,
    pub lr_ae2: f64,
    pub batch_size: usize,
    /// AE2 batch size when it differs from AE1's; 1 gives per-sample updates.
    pub batch_size_ae2: Option<usize>,
    pub seed: u64,
    /// Hidden layer sizes of AE1 as fractions of `m * K` (floored, at least 1).
    pub ae1_hidden_ratios: Vec<f64>,
    /// Hidden layer size of AE2 as a fraction of `m` (floored, at least 1).
    pub ae2_hidden_ratio: f64,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_ae1: 200,
            epochs_ae2: 20,
            lr_ae1: 1e-4,
            lr_ae2: 1e-3,
            batch_size: 256,
            batch_size_ae2: None,
            seed: 0,
            ae1_hidden_ratios: vec![0.5],
            ae2_hidden_ratio: 0.1,
            early_stop_patience: None,
        }
    }
}

/// `floor(ratio * width)`, never below one node.
pub fn hidden_size(width: usize, ratio: f64) -> usize {
    (libm::floor(width as f64 * ratio) as usize).max(1)
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ratios_ok = self
            .ae1_hidden_ratios
            .iter()
            .chain(core::iter::once(&self.ae2_hidden_ratio))
            .all(|r| *r > 0.0 && r.is_finite());
        if self.epochs_ae1 == 0
            || self.epochs_ae2 == 0
            || !(self.lr_ae1 > 0.0)
            || !(self.lr_ae2 > 0.0)
            || self.batch_size == 0
            || self.batch_size_ae2 == Some(0)
            || !ratios_ok
        {
            return Err(Error::InvalidParam("training settings must all be positive".into()));
        }
        Ok(())
    }

    /// `m*K -> hidden... -> m*K`
    pub fn ae1_dims(&self, dim: usize, window_len: usize) -> Vec<usize> {
        let width = dim * window_len;
        let mut dims = vec![width];
        dims.extend(self.ae1_hidden_ratios.iter().map(|&r| hidden_size(width, r)));
        dims.push(width);
        dims
    }

    /// `m -> floor(m * ratio) -> m`
    pub fn ae2_dims(&self, dim: usize) -> Vec<usize> {
        vec![dim, hidden_size(dim, self.ae2_hidden_ratio), dim]
    }

    pub fn split(&self, n_windows: usize) -> Result<Split> {
        split_train_val(n_windows, derive_seed(self.seed, STREAM_SPLIT))
    }

    pub(crate) fn stage1_fit(&self) -> FitConfig {
        FitConfig {
            epochs: self.epochs_ae1,
            lr: self.lr_ae1,
            batch_size: self.batch_size,
            shuffle_seed: derive_seed(self.seed, STREAM_AE1_SHUFFLE),
            early_stop_patience: self.early_stop_patience,
        }
    }

    pub(crate) fn stage1_init_seed(&self) -> u64 {
        derive_seed(self.seed, STREAM_AE1_INIT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainMeta {
    pub epochs_ae1: usize,
    pub epochs_ae2: usize,
    pub seed: u64,
    pub final_train_loss_ae1: f64,
    pub final_val_loss_ae1: Option<f64>,
    pub final_train_loss_ae2: f64,
    pub final_val_loss_ae2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub ae1: Vec<EpochLoss>,
    pub ae2: Vec<EpochLoss>,
}

/// Intermediate quantities of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// AE1 estimate of the final instant.
    pub x_prime: Vec<f64>,
    /// `x_t - x'_t`
    pub dx: Vec<f64>,
    /// AE2 estimate of `dx`.
    pub dx_prime: Vec<f64>,
    /// `x'_t + dx'_t`
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TsaeModel {
    pub ae1: DenseNet,
    pub ae2: DenseNet,
    pub window_len: usize,
    pub dim: usize,
    pub meta: TrainMeta,
}

fn check_windows(windows: &WindowSeries<'_>) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::Empty("windows"));
    }
    Ok(())
}

/// STEP 1: fit AE1 on flattened windows.
pub fn train_stage1(windows: &WindowSeries<'_>, split: &Split, cfg: &TrainConfig) -> Result<(DenseNet, Vec<EpochLoss>)> {
    cfg.validate()?;
    check_windows(windows)?;
    let dims = cfg.ae1_dims(windows.dim(), windows.window_len());
    let mut ae1 = DenseNet::new(&dims, cfg.stage1_init_seed())?;
    let log = fit_autoencoder(&mut ae1, windows, &split.train, &split.val, &cfg.stage1_fit())?;
    Ok((ae1, log))
}

/// AE1 outputs `x'_t` and residuals `dx_t = x_t - x'_t` for every window,
/// one row per window.
pub fn stage1_outputs(ae1: &DenseNet, windows: &WindowSeries<'_>) -> Result<(Matrix, Matrix)> {
    let width = windows.width();
    check_len("AE1 input width", ae1.input_dim(), width)?;
    check_len("AE1 output width", ae1.output_dim(), width)?;
    let m = windows.dim();
    let n = windows.count();
    let mut xp = Matrix::zeros(n, m);
    let mut dx = Matrix::zeros(n, m);
    let mut ws = Workspace::new(ae1, SCORE_CHUNK);
    let mut buf = Vec::with_capacity(SCORE_CHUNK * width);
    for start in (0..n).step_by(SCORE_CHUNK) {
        let end = (start + SCORE_CHUNK).min(n);
        buf.clear();
        for i in start..end {
            buf.extend_from_slice(windows.window(i));
        }
        ae1.forward_ws(&buf, end - start, &mut ws);
        let recon = ws.output(end - start);
        for (j, i) in (start..end).enumerate() {
            let x = windows.last_instant(i);
            let last = &recon[j * width + width - m..(j + 1) * width];
            xp.row_mut(i).copy_from_slice(last);
            for ((d, a), b) in dx.row_mut(i).iter_mut().zip(x).zip(last) {
                *d = a - b;
            }
        }
    }
    Ok((xp, dx))
}

/// Residuals `dx_t = x_t - x'_t` of every window under `ae1`.
pub fn residuals(ae1: &DenseNet, windows: &WindowSeries<'_>) -> Result<Matrix> {
    Ok(stage1_outputs(ae1, windows)?.1)
}

/// STEP 2: fit AE2 on residuals of the frozen `ae1`.
pub fn train_stage2(
    ae1: &DenseNet,
    windows: &WindowSeries<'_>,
    split: &Split,
    cfg: &TrainConfig,
) -> Result<(DenseNet, Vec<EpochLoss>)> {
    cfg.validate()?;
    check_windows(windows)?;
    // AE1 is frozen, so computing residuals once equals recomputing them each epoch.
    let dx = residuals(ae1, windows)?;
    let mut ae2 = DenseNet::new(&cfg.ae2_dims(windows.dim()), derive_seed(cfg.seed, STREAM_AE2_INIT))?;
    let fit = FitConfig {
        epochs: cfg.epochs_ae2,
        lr: cfg.lr_ae2,
        batch_size: cfg.batch_size_ae2.unwrap_or(cfg.batch_size),
        shuffle_seed: derive_seed(cfg.seed, STREAM_AE2_SHUFFLE),
        early_stop_patience: cfg.early_stop_patience,
    };
    let log = fit_autoencoder(&mut ae2, &dx, &split.train, &split.val, &fit)?;
    Ok((ae2, log))
}

/// Both training stages on windows of normal data.
pub fn train_tsae(windows: &WindowSeries<'_>, cfg: &TrainConfig) -> Result<(TsaeModel, TrainLog)> {
    cfg.validate()?;
    check_windows(windows)?;
    let split = cfg.split(windows.count())?;
    let (ae1, log1) = train_stage1(windows, &split, cfg)?;
    let (ae2, log2) = train_stage2(&ae1, windows, &split, cfg)?;
    let last1 = log1.last().copied().unwrap_or(EpochLoss { epoch: 0, train_loss: 0.0, val_loss: None });
    let last2 = log2.last().copied().unwrap_or(EpochLoss { epoch: 0, train_loss: 0.0, val_loss: None });
    let model = TsaeModel {
        ae1,
        ae2,
        window_len: windows.window_len(),
        dim: windows.dim(),
        meta: TrainMeta {
            epochs_ae1: log1.len(),
            epochs_ae2: log2.len(),
            seed: cfg.seed,
            final_train_loss_ae1: last1.train_loss,
            final_val_loss_ae1: last1.val_loss,
            final_train_loss_ae2: last2.train_loss,
            final_val_loss_ae2: last2.val_loss,
        },
    };
    Ok((model, TrainLog { ae1: log1, ae2: log2 }))
}

impl TsaeModel {
    /// Check the stored networks against `window_len` and `dim`.
    pub fn validate(&self) -> Result<()> {
        let width = self.dim * self.window_len;
        check_len("AE1 input width", width, self.ae1.input_dim())?;
        check_len("AE1 output width", width, self.ae1.output_dim())?;
        check_len("AE2 input width", self.dim, self.ae2.input_dim())?;
        check_len("AE2 output width", self.dim, self.ae2.output_dim())?;
        Ok(())
    }

    /// Compose both autoencoders on one flattened window.
    pub fn reconstruct(&self, window: &[f64]) -> Result<Reconstruction> {
        check_len("window width", self.dim * self.window_len, window.len())?;
        let w_prime = self.ae1.forward_row(window)?;
        let m = self.dim;
        let x = &window[window.len() - m..];
        let x_prime = w_prime[w_prime.len() - m..].to_vec();
        let dx: Vec<f64> = x.iter().zip(&x_prime).map(|(a, b)| a - b).collect();
        let dx_prime = self.ae2.forward_row(&dx)?;
        let r = x_prime.iter().zip(&dx_prime).map(|(a, b)| a + b).collect();
        Ok(Reconstruction {
            x_prime,
            dx,
            dx_prime,
            r,
        })
    }

    /// `||x_t - R_t||^2` for one flattened window.
    pub fn anomaly_score(&self, window: &[f64]) -> Result<f64> {
        let rec = self.reconstruct(window)?;
        Ok(sq_dist(&window[window.len() - self.dim..], &rec.r))
    }

    /// Scores for every window, batched. Equal to [`TsaeModel::anomaly_score`] per window.
    pub fn score_windows(&self, windows: &WindowSeries<'_>) -> Result<Vec<f64>> {
        check_len("signal count", self.dim, windows.dim())?;
        check_len("window length", self.window_len, windows.window_len())?;
        let (xp, dx) = stage1_outputs(&self.ae1, windows)?;
        let m = self.dim;
        let mut scores = Vec::with_capacity(windows.count());
        let mut ws = Workspace::new(&self.ae2, SCORE_CHUNK);
        let mut r = vec![0.0; m];
        for start in (0..dx.rows()).step_by(SCORE_CHUNK) {
            let end = (start + SCORE_CHUNK).min(dx.rows());
            self.ae2.forward_ws(dx.rows_slice(start, end), end - start, &mut ws);
            let out = ws.output(end - start);
            for (j, i) in (start..end).enumerate() {
                let dp = &out[j * m..(j + 1) * m];
                for ((rv, a), b) in r.iter_mut().zip(xp.row(i)).zip(dp) {
                    *rv = a + b;
                }
                scores.push(sq_dist(windows.last_instant(i), &r));
            }
        }
        Ok(scores)
    }

    /// Labels for every window: 1 when the score is strictly above `threshold`.
    pub fn detect(&self, windows: &WindowSeries<'_>, threshold: f64) -> Result<Vec<u8>> {
        if !threshold.is_finite() {
            return Err(Error::NonFinite("threshold"));
        }
        Ok(threshold_scores(&self.score_windows(windows)?, threshold))
    }

    /// AE1 outputs `x'_t` and residuals `dx_t` for every window, `N x m` each.
    pub fn components(&self, windows: &WindowSeries<'_>) -> Result<(Matrix, Matrix)> {
        stage1_outputs(&self.ae1, windows)
    }

    /// Mean `||dx_t||^2` and mean `||dx_t - dx'_t||^2` over the windows.
    pub fn residual_energy(&self, windows: &WindowSeries<'_>) -> Result<(f64, f64)> {
        let dx = residuals(&self.ae1, windows)?;
        let idx: Vec<usize> = (0..dx.rows()).collect();
        let before = dx.as_slice().iter().map(|v| v * v).sum::<f64>() / dx.rows().max(1) as f64;
        let after = mean_loss(&self.ae2, &dx, &idx, SCORE_CHUNK);
        Ok((before, after))
    }
}

/// `y_t = 1` iff `score_t > threshold`.
pub fn threshold_scores(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > threshold)).collect()
}
