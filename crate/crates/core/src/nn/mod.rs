//! Dense feed-forward networks with sigmoid activations.
//!
//! Every layer computes `sigmoid(W a + b)`, the output layer included, so all
//! network outputs lie in `(0, 1)`. Weights are row-major `(fan_out, fan_in)`.
//!
//! Batches are flat row-major buffers of `batch * dim` values. The training
//! loss is the mean over the batch of per-sample squared L2 reconstruction
//! errors; per-sample scores stay unreduced.

mod adam;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, sq_dist, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Sigmoid,
}

/// Logistic sigmoid, branch form so `exp` never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `(fan_out, fan_in)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "NetRepr"))]
pub struct DenseNet {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
}

/// Unchecked serialized form; converted through [`DenseNet::from_layers`].
#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct NetRepr {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
}

#[cfg(feature = "serde")]
impl TryFrom<NetRepr> for DenseNet {
    type Error = Error;

    fn try_from(repr: NetRepr) -> Result<Self> {
        let net = DenseNet::from_layers(repr.layers, repr.activation)?;
        if net.layer_dims != repr.layer_dims {
            return Err(Error::InvalidDims(format!(
                "stored layer sizes {:?} disagree with the weights {:?}",
                repr.layer_dims, net.layer_dims
            )));
        }
        Ok(net)
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidDims(format!(
            "need at least input and output sizes, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::InvalidDims(format!(
            "zero-sized layer in {layer_dims:?}"
        )));
    }
    Ok(())
}

impl DenseNet {
    /// Glorot-uniform weights drawn from a ChaCha8 stream seeded with `seed`,
    /// layer by layer in row-major order; zero biases.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
                let dist = Uniform::new_inclusive(-limit, limit)
                    .map_err(|e| Error::InvalidParam(format!("{e}")))?;
                let weights = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
                Ok(Layer {
                    fan_in,
                    fan_out,
                    weights,
                    biases: vec![0.0; fan_out],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation: Activation::Sigmoid,
        })
    }

    /// Rebuild a network from stored layers, checking every shape and value.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidDims("network has no layers".into()))?;
        let mut layer_dims = vec![first.fan_in];
        for layer in &layers {
            check_len("layer fan_in", *layer_dims.last().unwrap(), layer.fan_in)?;
            check_len("weight count", layer.fan_in * layer.fan_out, layer.weights.len())?;
            check_len("bias count", layer.fan_out, layer.biases.len())?;
            if !layer.weights.iter().chain(&layer.biases).all(|v| v.is_finite()) {
                return Err(Error::NonFinite("stored parameters"));
            }
            layer_dims.push(layer.fan_out);
        }
        validate_dims(&layer_dims)?;
        Ok(Self {
            layer_dims,
            layers,
            activation,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn param_count(&self) -> ParamCount {
        count_params(&self.layer_dims)
    }

    #[cfg(test)]
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Forward pass on a `B x d_in` batch.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        check_len("forward input width", self.input_dim(), batch.cols())?;
        let mut ws = Workspace::new(self, batch.rows());
        let rows = batch.rows();
        self.forward_ws(batch.as_slice(), rows, &mut ws);
        let out = ws.output(rows).to_vec();
        Matrix::from_vec(rows, self.output_dim(), out)
    }

    /// Forward pass for a single input vector.
    pub fn forward_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input width", self.input_dim(), x.len())?;
        let mut ws = Workspace::new(self, 1);
        self.forward_ws(x, 1, &mut ws);
        Ok(ws.output(1).to_vec())
    }

    /// Unchecked forward pass; activations land in `ws`.
    pub(crate) fn forward_ws(&self, input: &[f64], batch: usize, ws: &mut Workspace) {
        ws.ensure(self, batch);
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = ws.acts.split_at_mut(l);
            let a_in: &[f64] = if l == 0 { input } else { &prev[l - 1] };
            let a_out = &mut rest[0];
            // Output-row outer loop: one weight row stays hot across the batch.
            for (o, bias) in layer.biases.iter().enumerate() {
                let w = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                for b in 0..batch {
                    let x = &a_in[b * layer.fan_in..(b + 1) * layer.fan_in];
                    a_out[b * layer.fan_out + o] = sigmoid(dot(w, x) + bias);
                }
            }
        }
    }

    /// Gradient of the batch-mean squared reconstruction loss, accumulated
    /// into zeroed `grads`. Returns the loss. Requires a prior `forward_ws`
    /// on the same input.
    pub(crate) fn backward_ws(
        &self,
        input: &[f64],
        target: &[f64],
        batch: usize,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> f64 {
        let n_layers = self.layers.len();
        let out_dim = self.output_dim();
        let scale = 2.0 / batch as f64;
        let mut loss = 0.0;
        {
            let y = &ws.acts[n_layers - 1][..batch * out_dim];
            let delta = &mut ws.deltas[n_layers - 1][..batch * out_dim];
            for b in 0..batch {
                let yr = &y[b * out_dim..(b + 1) * out_dim];
                let tr = &target[b * out_dim..(b + 1) * out_dim];
                loss += sq_dist(yr, tr);
                let dr = &mut delta[b * out_dim..(b + 1) * out_dim];
                for ((d, &yv), &tv) in dr.iter_mut().zip(yr).zip(tr) {
                    *d = scale * (yv - tv) * yv * (1.0 - yv);
                }
            }
        }
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let (lower, upper) = ws.deltas.split_at_mut(l);
            let delta = &upper[0][..batch * layer.fan_out];
            let a_in: &[f64] = if l == 0 { input } else { &ws.acts[l - 1] };
            let g = &mut grads.layers[l];
            // Per parameter, contributions still arrive in batch order.
            for o in 0..layer.fan_out {
                let gw = &mut g.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                for b in 0..batch {
                    let d = delta[b * layer.fan_out + o];
                    g.biases[o] += d;
                    axpy(d, &a_in[b * layer.fan_in..(b + 1) * layer.fan_in], gw);
                }
            }
            if l > 0 {
                let prev_delta = &mut lower[l - 1][..batch * layer.fan_in];
                prev_delta.iter_mut().for_each(|v| *v = 0.0);
                for o in 0..layer.fan_out {
                    let w = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                    for b in 0..batch {
                        let d = delta[b * layer.fan_out + o];
                        axpy(d, w, &mut prev_delta[b * layer.fan_in..(b + 1) * layer.fan_in]);
                    }
                }
                for (pd, a) in prev_delta.iter_mut().zip(&a_in[..batch * layer.fan_in]) {
                    *pd *= a * (1.0 - a);
                }
            }
        }
        loss / batch as f64
    }

    /// Exact gradient of `mean_b ||net(x_b) - t_b||^2`. Returns `(loss, gradients)`.
    pub fn backward(&self, input: &Matrix, target: &Matrix) -> Result<(f64, Gradients)> {
        check_len("backward input width", self.input_dim(), input.cols())?;
        check_len("backward target width", self.output_dim(), target.cols())?;
        check_len("backward batch rows", input.rows(), target.rows())?;
        if input.rows() == 0 {
            return Err(Error::Empty("backward batch"));
        }
        let batch = input.rows();
        let mut ws = Workspace::new(self, batch);
        let mut grads = Gradients::zeros_like(self);
        self.forward_ws(input.as_slice(), batch, &mut ws);
        let loss = self.backward_ws(input.as_slice(), target.as_slice(), batch, &mut ws, &mut grads);
        Ok((loss, grads))
    }
}

/// Reusable activation and delta buffers for a given network and batch size.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    capacity: usize,
    dims: Vec<usize>,
}

impl Workspace {
    pub(crate) fn new(net: &DenseNet, batch: usize) -> Self {
        let mut ws = Self::default();
        ws.ensure(net, batch);
        ws
    }

    fn ensure(&mut self, net: &DenseNet, batch: usize) {
        if self.capacity >= batch && self.dims == net.layer_dims {
            return;
        }
        self.dims = net.layer_dims.clone();
        self.acts = net.layer_dims[1..].iter().map(|&d| vec![0.0; d * batch]).collect();
        self.deltas = self.acts.clone();
        self.capacity = batch;
    }

    pub(crate) fn output(&self, batch: usize) -> &[f64] {
        let last = self.acts.last().expect("workspace used before forward");
        &last[..batch * (last.len() / self.capacity.max(1))]
    }
}

/// Per-parameter gradients with the same shapes as a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    fan_in: l.fan_in,
                    fan_out: l.fan_out,
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|v| *v = 0.0);
            l.biases.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn matches(&self, net: &DenseNet) -> Result<()> {
        check_len("gradient layers", net.layers.len(), self.layers.len())?;
        for (g, l) in self.layers.iter().zip(&net.layers) {
            check_len("gradient weights", l.weights.len(), g.weights.len())?;
            check_len("gradient biases", l.biases.len(), g.biases.len())?;
        }
        Ok(())
    }
}

/// Squared L2 distance `||x - y||^2`.
pub fn recon_loss(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("recon_loss operands", x.len(), y.len())?;
    Ok(sq_dist(x, y))
}

/// Node and edge totals of a layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamCount {
    /// Sum of all non-input layer sizes.
    pub nodes: usize,
    /// Sum of `fan_in * fan_out` over adjacent layers (biases excluded).
    pub edges: usize,
}

pub fn count_params(layer_dims: &[usize]) -> ParamCount {
    ParamCount {
        nodes: layer_dims.iter().skip(1).sum(),
        edges: layer_dims.windows(2).map(|w| w[0] * w[1]).sum(),
    }
}

/// Counts for layers of unrounded width `ratio * width`, as tabulated when
/// a configuration is written as ratios. The node total is floored and the
/// edge total rounded.
pub fn count_params_nominal(width: usize, hidden_ratios: &[f64]) -> ParamCount {
    let w = width as f64;
    let mut sizes = vec![w];
    sizes.extend(hidden_ratios.iter().map(|r| r * w));
    sizes.push(w);
    let nodes: f64 = sizes.iter().skip(1).sum();
    let edges: f64 = sizes.windows(2).map(|p| p[0] * p[1]).sum();
    ParamCount {
        nodes: libm::floor(nodes) as usize,
        edges: libm::round(edges) as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Per-neuron loop oracle, written without the shared kernels.
    fn naive_forward(net: &DenseNet, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in net.layers() {
            let mut next = Vec::new();
            for o in 0..layer.fan_out {
                let mut z = layer.biases[o];
                for i in 0..layer.fan_in {
                    z += layer.weights[o * layer.fan_in + i] * a[i];
                }
                next.push(1.0 / (1.0 + libm::exp(-z)));
            }
            a = next;
        }
        a
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn init_shapes() {
        let net = DenseNet::new(&[4, 2, 4], 7).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(|l| (l.fan_out, l.fan_in, l.biases.len())).collect();
        assert_eq!(shapes, vec![(2, 4, 2), (4, 2, 4)]);
        assert!(net.layers().iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));

        let tiny = DenseNet::new(&[1, 1], 99).unwrap();
        assert_eq!(tiny.layers().len(), 1);
        assert_eq!(tiny.layers()[0].weights.len(), 1);
        assert_eq!(tiny.layers()[0].biases.len(), 1);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(DenseNet::new(&[], 0).is_err());
        assert!(DenseNet::new(&[3], 0).is_err());
        assert!(DenseNet::new(&[3, 0, 3], 0).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = DenseNet::new(&[5, 3, 5], 11).unwrap();
        let b = DenseNet::new(&[5, 3, 5], 11).unwrap();
        let c = DenseNet::new(&[5, 3, 5], 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let limit = libm::sqrt(6.0 / 8.0);
        assert!(a.layers().iter().all(|l| l.weights.iter().all(|w| w.abs() <= limit)));
    }

    #[test]
    fn zero_net_outputs_half() {
        let mut net = DenseNet::new(&[3, 2, 3], 1).unwrap();
        for l in net.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let out = net.forward(&Matrix::from_rows(&[vec![5.0, -3.0, 100.0]]).unwrap()).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn forward_matches_naive_oracle_and_is_batch_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::new(&[7, 5, 3, 7], 4).unwrap();
        let batch = random_matrix(&mut rng, 6, 7);
        let out = net.forward(&batch).unwrap();
        for r in 0..6 {
            let single = net.forward_row(batch.row(r)).unwrap();
            assert_eq!(single.as_slice(), out.row(r));
            let naive = naive_forward(&net, batch.row(r));
            for (a, b) in naive.iter().zip(out.row(r)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = DenseNet::new(&[3, 2, 3], 1).unwrap();
        assert!(net.forward(&Matrix::zeros(2, 4)).is_err());
        assert!(net.forward_row(&[0.0; 2]).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recon_loss_cases() {
        assert_eq!(recon_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(recon_loss(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert!(recon_loss(&[0.0], &[0.0, 1.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..13).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..13).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut oracle = 0.0;
        for i in 0..13 {
            oracle += (x[i] - y[i]) * (x[i] - y[i]);
        }
        assert_eq!(recon_loss(&x, &y).unwrap(), oracle);
    }

    #[test]
    fn perfect_target_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DenseNet::new(&[4, 3, 4], 2).unwrap();
        let x = random_matrix(&mut rng, 3, 4);
        let target = net.forward(&x).unwrap();
        let (loss, grads) = net.backward(&x, &target).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|&g| g == 0.0)));
    }

    #[test]
    fn repeated_rows_give_single_row_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = DenseNet::new(&[3, 2, 3], 3).unwrap();
        let x = random_matrix(&mut rng, 1, 3);
        let t = random_matrix(&mut rng, 1, 3);
        let (l1, g1) = net.backward(&x, &t).unwrap();
        let xs = x.select_rows(&[0, 0, 0, 0]);
        let ts = t.select_rows(&[0, 0, 0, 0]);
        let (l4, g4) = net.backward(&xs, &ts).unwrap();
        assert!((l1 - l4).abs() < 1e-14);
        for (a, b) in g1.layers.iter().zip(&g4.layers) {
            for (u, v) in a.weights.iter().chain(&a.biases).zip(b.weights.iter().chain(&b.biases)) {
                assert!((u - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn backward_rejects_shape_mismatch() {
        let net = DenseNet::new(&[3, 2, 3], 3).unwrap();
        assert!(net.backward(&Matrix::zeros(2, 3), &Matrix::zeros(3, 3)).is_err());
        assert!(net.backward(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2)).is_err());
        assert!(net.backward(&Matrix::zeros(0, 3), &Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn count_params_table_rows() {
        assert_eq!(count_params(&[1220, 610, 1220]), ParamCount { nodes: 1830, edges: 1_488_400 });
        assert_eq!(
            count_params(&[1220, 610, 305, 610, 1220]),
            ParamCount { nodes: 2745, edges: 1_860_500 }
        );
        // With the floored 152-node bottleneck the edge total is 305 short
        // of the tabulated 1,953,525, which uses the unrounded 152.5.
        assert_eq!(
            count_params(&[1220, 610, 305, 152, 305, 610, 1220]),
            ParamCount { nodes: 3202, edges: 1_953_220 }
        );
        assert_eq!(
            count_params_nominal(1220, &[0.5, 0.25, 0.125, 0.25, 0.5]),
            ParamCount { nodes: 3202, edges: 1_953_525 }
        );
        assert_eq!(count_params_nominal(1220, &[0.5]), count_params(&[1220, 610, 1220]));
    }

    #[test]
    fn from_layers_validates() {
        let net = DenseNet::new(&[3, 2, 3], 3).unwrap();
        let rebuilt = DenseNet::from_layers(net.layers().to_vec(), Activation::Sigmoid).unwrap();
        assert_eq!(rebuilt, net);
        let mut bad = net.layers().to_vec();
        bad[1].fan_in = 5;
        assert!(DenseNet::from_layers(bad, Activation::Sigmoid).is_err());
        let mut nan = net.layers().to_vec();
        nan[0].weights[0] = f64::NAN;
        assert!(DenseNet::from_layers(nan, Activation::Sigmoid).is_err());
    }
}
