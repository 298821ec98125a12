//! Mini-batch Adam training loop shared by both TSAE stages and the baselines.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::nn::{adam_step, AdamConfig, AdamState, DenseNet, Gradients, Workspace};
use crate::preprocess::WindowSeries;

/// Indexed, fixed-width samples used as both input and target.
pub trait SampleSource {
    fn width(&self) -> usize;
    fn len(&self) -> usize;
    fn sample(&self, i: usize) -> &[f64];
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SampleSource for WindowSeries<'_> {
    fn width(&self) -> usize {
        WindowSeries::width(self)
    }
    fn len(&self) -> usize {
        self.count()
    }
    fn sample(&self, i: usize) -> &[f64] {
        self.window(i)
    }
}

impl SampleSource for Matrix {
    fn width(&self) -> usize {
        self.cols()
    }
    fn len(&self) -> usize {
        self.rows()
    }
    fn sample(&self, i: usize) -> &[f64] {
        self.row(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub lr: f64,
    /// 1 reproduces plain per-sample updates.
    pub batch_size: usize,
    pub shuffle_seed: u64,
    /// Stop after this many epochs without a validation improvement.
    pub early_stop_patience: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean per-sample squared reconstruction error over the training indices.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Mean per-sample reconstruction loss of `net` over `idx`.
pub fn mean_loss<S: SampleSource + ?Sized>(net: &DenseNet, source: &S, idx: &[usize], batch: usize) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let width = source.width();
    let batch = batch.max(1);
    let mut ws = Workspace::new(net, batch);
    let mut buf = Vec::with_capacity(batch * width);
    let mut total = 0.0;
    for chunk in idx.chunks(batch) {
        buf.clear();
        for &i in chunk {
            buf.extend_from_slice(source.sample(i));
        }
        net.forward_ws(&buf, chunk.len(), &mut ws);
        let out = ws.output(chunk.len());
        total += crate::linalg::sq_dist(out, &buf);
    }
    total / idx.len() as f64
}

/// Train `net` to reproduce its inputs. Returns one loss record per epoch run.
pub fn fit_autoencoder<S: SampleSource + ?Sized>(
    net: &mut DenseNet,
    source: &S,
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &FitConfig,
) -> Result<Vec<EpochLoss>> {
    check_len("autoencoder input width", net.input_dim(), source.width())?;
    check_len("autoencoder output width", net.output_dim(), source.width())?;
    if train_idx.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidParam("epochs, batch size and learning rate must be positive".into()));
    }
    let width = source.width();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order = train_idx.to_vec();
    let mut adam = AdamState::new(net, AdamConfig::with_lr(cfg.lr));
    let mut grads = Gradients::zeros_like(net);
    let mut ws = Workspace::new(net, cfg.batch_size);
    let mut buf = Vec::with_capacity(cfg.batch_size * width);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            buf.clear();
            for &i in chunk {
                buf.extend_from_slice(source.sample(i));
            }
            grads.clear();
            net.forward_ws(&buf, chunk.len(), &mut ws);
            let loss = net.backward_ws(&buf, &buf, chunk.len(), &mut ws, &mut grads);
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            total += loss * chunk.len() as f64;
            adam_step(net, &mut adam, &grads)?;
        }
        let val_loss = (!val_idx.is_empty()).then(|| mean_loss(net, source, val_idx, cfg.batch_size));
        log.push(EpochLoss {
            epoch,
            train_loss: total / order.len() as f64,
            val_loss,
        });
        if let (Some(patience), Some(v)) = (cfg.early_stop_patience, val_loss) {
            if v < best_val {
                best_val = v;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(log)
}

/// Independent sub-seed for a named stream of one run (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
