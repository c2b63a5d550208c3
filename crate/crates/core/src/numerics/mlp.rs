use serde::{Deserialize, Serialize};

use super::gaussian::{LOG_STD_MAX, LOG_STD_MIN};
use super::matrix::{matmul, matmul_a_bt, matmul_at_b, Matrix};
use super::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

/// Transform applied to the final linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    Linear,
    /// Elementwise `tanh`, output in `(-1, 1)`.
    TanhBounded,
    /// First half of the outputs is a mean, second half a log standard
    /// deviation clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    Gaussian,
}

/// One fully connected layer. `weights` is `in_dim × out_dim`, so a row
/// vector input maps as `x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Parameters of a ReLU multilayer perceptron.
///
/// The same type doubles as the gradient container, so optimizer moments and
/// gradients share its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
    pub activation: Activation,
    pub head: OutputHead,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    /// Post-activation output of every hidden layer.
    hidden: Vec<Matrix>,
    /// Final layer output before the head transform.
    raw_output: Matrix,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }
}

#[derive(Debug, Clone)]
pub struct MlpBackward {
    /// Gradient of the batch-mean loss with respect to every parameter.
    pub grads: MlpParams,
    /// Per-sample gradient of each sample's loss with respect to its input.
    pub input_grad: Matrix,
}

impl MlpParams {
    /// Builds a network with layer widths `sizes` (input first, output last).
    ///
    /// Hidden weights are drawn uniformly within `±sqrt(6 / fan_in)`, the
    /// output layer within `±sqrt(1 / fan_in)`. Biases start at zero.
    pub fn new(sizes: &[usize], head: OutputHead, rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let mut layers = Vec::with_capacity(n);
        for (l, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = if l + 1 == n {
                (1.0 / fan_in as f64).sqrt()
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-bound, bound))
                .collect();
            layers.push(Dense {
                weights: Matrix::from_vec(fan_in, fan_out, data)?,
                biases: vec![0.0; fan_out],
            });
        }
        Self::from_layers(layers, Activation::Relu, head)
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation, head: OutputHead) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.biases.len() != layer.out_dim() {
                return Err(Error::config(format!(
                    "layer {i}: {} biases for {} outputs",
                    layer.biases.len(),
                    layer.out_dim()
                )));
            }
            if let Some(next) = layers.get(i + 1) {
                if next.in_dim() != layer.out_dim() {
                    return Err(Error::config(format!(
                        "layer {} expects {} inputs but layer {i} produces {}",
                        i + 1,
                        next.in_dim(),
                        layer.out_dim()
                    )));
                }
            }
        }
        let params = Self {
            layers,
            activation,
            head,
        };
        if head == OutputHead::Gaussian && params.output_dim() % 2 != 0 {
            return Err(Error::config("gaussian head needs an even output width"));
        }
        Ok(params)
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: Matrix::zeros(l.in_dim(), l.out_dim()),
                    biases: vec![0.0; l.out_dim()],
                })
                .collect(),
            activation: self.activation,
            head: self.head,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim())
    }

    /// Parameters in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Inverse of [`MlpParams::flatten`].
    pub fn assign_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let w = l.weights.as_mut_slice();
            w.copy_from_slice(&values[off..off + w.len()]);
            off += w.len();
            let nb = l.biases.len();
            l.biases.copy_from_slice(&values[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.as_slice().iter().all(|v| v.is_finite()) && l.biases.iter().all(|v| v.is_finite())
        })
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.into_vec())
    }

    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(input)?.output)
    }

    pub fn forward_cached(&self, input: &Matrix) -> Result<ForwardCache> {
        if input.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let n = input.rows();
        let last = self.layers.len() - 1;
        let mut hidden = Vec::with_capacity(last);
        let mut raw_output = Matrix::zeros(0, 0);
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = if i == 0 { input } else { &hidden[i - 1] };
            let mut z = Matrix::zeros(n, layer.out_dim());
            matmul(
                n,
                layer.in_dim(),
                layer.out_dim(),
                prev.as_slice(),
                layer.weights.as_slice(),
                z.as_mut_slice(),
            );
            for r in 0..n {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            if i < last {
                match self.activation {
                    Activation::Relu => z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0)),
                }
                hidden.push(z);
            } else {
                raw_output = z;
            }
        }
        let output = self.apply_head(&raw_output);
        Ok(ForwardCache {
            input: input.clone(),
            hidden,
            raw_output,
            output,
        })
    }

    fn apply_head(&self, raw: &Matrix) -> Matrix {
        let mut out = raw.clone();
        match self.head {
            OutputHead::Linear => {}
            OutputHead::TanhBounded => out.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh()),
            OutputHead::Gaussian => {
                let d = raw.cols() / 2;
                for r in 0..out.rows() {
                    for v in &mut out.row_mut(r)[d..] {
                        *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
                    }
                }
            }
        }
        out
    }

    /// Recomputes the forward pass for `input` and backpropagates `upstream`.
    pub fn backward(&self, input: &Matrix, upstream: &Matrix) -> Result<MlpBackward> {
        let cache = self.forward_cached(input)?;
        self.backward_cached(&cache, upstream)
    }

    /// Backpropagates per-sample output gradients through a cached pass.
    ///
    /// Row `i` of `upstream` is the derivative of sample `i`'s loss with
    /// respect to the head output. Parameter gradients are averaged over the
    /// batch; input gradients are left per-sample.
    pub fn backward_cached(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<MlpBackward> {
        let n = cache.input.rows();
        if upstream.rows() != n || upstream.cols() != self.output_dim() {
            return Err(Error::config(format!(
                "upstream gradient is {}x{}, expected {}x{}",
                upstream.rows(),
                upstream.cols(),
                n,
                self.output_dim()
            )));
        }
        let mut delta = upstream.clone();
        match self.head {
            OutputHead::Linear => {}
            OutputHead::TanhBounded => {
                for (g, y) in delta.as_mut_slice().iter_mut().zip(cache.output.as_slice()) {
                    *g *= 1.0 - y * y;
                }
            }
            OutputHead::Gaussian => {
                let d = self.output_dim() / 2;
                for r in 0..n {
                    let raw = cache.raw_output.row(r);
                    let g = delta.row_mut(r);
                    for j in d..2 * d {
                        if !(LOG_STD_MIN..=LOG_STD_MAX).contains(&raw[j]) {
                            g[j] = 0.0;
                        }
                    }
                }
            }
        }

        let inv_n = 1.0 / n as f64;
        let mut grads = self.zeros_like();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let prev = if i == 0 { &cache.input } else { &cache.hidden[i - 1] };
            let gl = &mut grads.layers[i];
            matmul_at_b(
                layer.in_dim(),
                n,
                layer.out_dim(),
                prev.as_slice(),
                delta.as_slice(),
                gl.weights.as_mut_slice(),
            );
            gl.weights.as_mut_slice().iter_mut().for_each(|v| *v *= inv_n);
            for r in 0..n {
                for (b, g) in gl.biases.iter_mut().zip(delta.row(r)) {
                    *b += g;
                }
            }
            gl.biases.iter_mut().for_each(|v| *v *= inv_n);

            let mut below = Matrix::zeros(n, layer.in_dim());
            matmul_a_bt(
                n,
                layer.out_dim(),
                layer.in_dim(),
                delta.as_slice(),
                layer.weights.as_slice(),
                below.as_mut_slice(),
            );
            if i > 0 {
                match self.activation {
                    Activation::Relu => {
                        for (g, a) in below.as_mut_slice().iter_mut().zip(prev.as_slice()) {
                            if *a <= 0.0 {
                                *g = 0.0;
                            }
                        }
                    }
                }
            }
            delta = below;
        }
        Ok(MlpBackward {
            grads,
            input_grad: delta,
        })
    }
}

/// Blends online parameters into target parameters:
/// `target ← tau·target + (1 − tau)·online`.
pub fn polyak_update(target: &mut MlpParams, online: &MlpParams, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::config(format!("polyak tau must be in (0, 1], got {tau}")));
    }
    if !target.same_shape(online) {
        return Err(Error::config("polyak update between differently shaped networks"));
    }
    if tau == 1.0 {
        return Ok(());
    }
    let keep = 1.0 - tau;
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (a, b) in t.weights.as_mut_slice().iter_mut().zip(o.weights.as_slice()) {
            *a = tau * *a + keep * b;
        }
        for (a, b) in t.biases.iter_mut().zip(&o.biases) {
            *a = tau * *a + keep * b;
        }
    }
    Ok(())
}
