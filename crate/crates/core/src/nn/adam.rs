use crate::error::{check_len, Error, Result};

use super::{DenseNet, Gradients};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter of one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Bias-corrected Adam update of a flat parameter slice.
///
/// `step` is the 1-based index of this update.
pub fn adam_update(
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grads: &[f64],
    cfg: &AdamConfig,
    step: u64,
) {
    let t = step as f64;
    let c1 = 1.0 - libm::pow(cfg.beta1, t);
    let c2 = 1.0 - libm::pow(cfg.beta2, t);
    for (((p, mi), vi), &g) in params.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grads) {
        *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
        *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
        let m_hat = *mi / c1;
        let v_hat = *vi / c2;
        *p -= cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps);
    }
}

/// One Adam step over all weights and biases of `net`.
///
/// Non-finite gradients are rejected before anything changes; a non-finite
/// parameter after the update is reported as an error.
pub fn adam_step(net: &mut DenseNet, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    grads.matches(net)?;
    check_len("adam moments", net.layers.len(), state.m.layers.len())?;
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    state.step += 1;
    let cfg = state.config;
    for (((layer, g), m), v) in net
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.m.layers)
        .zip(&mut state.v.layers)
    {
        adam_update(&mut layer.weights, &mut m.weights, &mut v.weights, &g.weights, &cfg, state.step);
        adam_update(&mut layer.biases, &mut m.biases, &mut v.biases, &g.biases, &cfg, state.step);
    }
    let finite = net
        .layers
        .iter()
        .all(|l| l.weights.iter().chain(&l.biases).all(|p| p.is_finite()));
    if finite {
        Ok(())
    } else {
        Err(Error::NonFinite("parameters after Adam update"))
    }
}
