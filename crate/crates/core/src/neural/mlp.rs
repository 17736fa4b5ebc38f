//! Dense tanh networks with a softmax or linear head.
//!
//! Parameters live in one flat vector, layer by layer, each layer storing its
//! `out x in` weight matrix row-major followed by its bias. Gradients and
//! optimizer state share that layout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Probabilities over the outputs (policy network).
    Softmax,
    /// Raw linear output (value network).
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    head: Head,
    params: Vec<f64>,
}

/// Per-layer activations from the last forward pass.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    probs: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

/// Dot product with four independent accumulators so it vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

/// Numerically stable softmax (max-subtracted), written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(logits.iter().map(|&z| (z - max).exp()));
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
}

impl Mlp {
    /// Glorot-uniform weights and zero biases. The last layer is further
    /// scaled by `head_gain`, so a small gain starts a softmax head near
    /// uniform.
    pub fn new(dims: &[usize], head: Head, head_gain: f64, seed: u64) -> Result<Self> {
        let mut net = Mlp::zeros(dims, head)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims.len() - 1;
        let mut off = 0;
        for (l, w) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            if l + 1 == layers {
                limit *= head_gain;
            }
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = rng.gen_range(-1.0..=1.0) * limit;
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize], head: Head) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Dimension(format!(
                "network needs at least two non-zero layer sizes, got {dims:?}"
            )));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            head,
            params: vec![0.0; param_count(dims)],
        })
    }

    pub fn from_params(dims: &[usize], head: Head, params: Vec<f64>) -> Result<Self> {
        let mut net = Mlp::zeros(dims, head)?;
        if params.len() != net.params.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for layout {dims:?} needing {}",
                params.len(),
                net.params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Zeroed gradient buffer matching the parameter layout.
    pub fn zero_grad(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    /// Multiplies the last layer (weights and bias) by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let (i, o) = (self.dims[self.dims.len() - 2], self.output_dim());
        let start = self.params.len() - (i * o + o);
        self.params[start..].iter_mut().for_each(|p| *p *= factor);
    }

    /// Runs the network, keeping activations in `ws`. Returns probabilities
    /// for a softmax head, the raw outputs for a linear head.
    pub fn forward<'w>(&self, input: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network input has length {}, expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        let layers = self.dims.len() - 1;
        ws.acts.resize_with(layers + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);

        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (w, rest) = self.params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            off += n_in * n_out + n_out;

            let (before, after) = ws.acts.split_at_mut(l + 1);
            let x = &before[l];
            let y = &mut after[0];
            y.clear();
            y.extend(
                w.chunks_exact(n_in)
                    .zip(b)
                    .map(|(row, &bias)| bias + dot(row, x)),
            );
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
        }

        let out = &ws.acts[layers];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite network output (input max |x| = {:.3e})",
                input.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            )));
        }
        match self.head {
            Head::Linear => Ok(&ws.acts[layers]),
            Head::Softmax => {
                softmax_into(&ws.acts[layers], &mut ws.probs);
                Ok(&ws.probs)
            }
        }
    }

    /// Accumulates into `grads` the parameter gradient of a loss whose
    /// derivative with respect to the last layer's pre-head output is
    /// `d_out`, using the activations of the preceding [`Self::forward`].
    pub fn backward(&self, ws: &mut Workspace, d_out: &[f64], grads: &mut [f64]) {
        let layers = self.dims.len() - 1;
        assert_eq!(d_out.len(), self.output_dim(), "d_out length");
        assert_eq!(ws.acts.len(), layers + 1, "backward before forward");
        assert_eq!(grads.len(), self.params.len(), "gradient buffer length");

        let mut delta = std::mem::take(&mut ws.delta);
        let mut delta_prev = std::mem::take(&mut ws.delta_prev);
        delta.clear();
        delta.extend_from_slice(d_out);

        let mut end = self.params.len();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let start = end - (n_in * n_out + n_out);
            let x = &ws.acts[l];
            {
                let (gw, gb) = grads[start..end].split_at_mut(n_in * n_out);
                for ((grow, gbias), &d) in gw.chunks_exact_mut(n_in).zip(gb).zip(&delta) {
                    *gbias += d;
                    if d != 0.0 {
                        grow.iter_mut().zip(x).for_each(|(g, &xi)| *g += d * xi);
                    }
                }
            }
            if l > 0 {
                let w = &self.params[start..start + n_in * n_out];
                delta_prev.clear();
                delta_prev.resize(n_in, 0.0);
                for (row, &d) in w.chunks_exact(n_in).zip(&delta) {
                    if d != 0.0 {
                        delta_prev.iter_mut().zip(row).for_each(|(dp, &wv)| *dp += d * wv);
                    }
                }
                // x = tanh(z) for hidden layers
                delta_prev
                    .iter_mut()
                    .zip(x)
                    .for_each(|(dp, &h)| *dp *= 1.0 - h * h);
                std::mem::swap(&mut delta, &mut delta_prev);
            }
            end = start;
        }
        ws.delta = delta;
        ws.delta_prev = delta_prev;
    }

    /// Output probabilities of a softmax network.
    pub fn probabilities(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        Ok(self.forward(input, &mut ws)?.to_vec())
    }

    /// Scalar output of a single-output network.
    pub fn value(&self, input: &[f64]) -> Result<f64> {
        let mut ws = Workspace::default();
        Ok(self.forward(input, &mut ws)?[0])
    }

    /// Gradient of `log pi(action | input)` for a softmax network.
    pub fn log_prob_grad(&self, input: &[f64], action: usize) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        let mut d: Vec<f64> = self.forward(input, &mut ws)?.iter().map(|p| -p).collect();
        let slot = d
            .get_mut(action)
            .ok_or_else(|| Error::Dimension(format!("action index {action} out of range")))?;
        *slot += 1.0;
        let mut g = self.zero_grad();
        self.backward(&mut ws, &d, &mut g);
        Ok(g)
    }

    /// Gradient of the (first) scalar output.
    pub fn value_grad(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        self.forward(input, &mut ws)?;
        let mut d = vec![0.0; self.output_dim()];
        d[0] = 1.0;
        let mut g = self.zero_grad();
        self.backward(&mut ws, &d, &mut g);
        Ok(g)
    }
}
