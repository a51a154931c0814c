//! Fully connected networks with hand-written backpropagation.
//!
//! Weights are stored `in × out` so that a batch forward pass is a single
//! `X · W` product over row-major data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `in_dim × out_dim`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

/// Per-layer inputs and outputs recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    outputs: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients with exactly the shapes of the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::config(format!(
                    "layer {i}: bias length {} != output dim {}",
                    l.bias.len(),
                    l.out_dim()
                )));
            }
            if l.in_dim() == 0 || l.out_dim() == 0 {
                return Err(Error::config(format!("layer {i} has a zero dimension")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::config(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights, zero biases. `dims` lists every width from
    /// input to output; hidden layers use `hidden`, the last uses `output`.
    pub fn init(dims: &[usize], hidden: Activation, output: Activation, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config("network needs input and output widths"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, w) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Matrix::from_fn(fan_in, fan_out, |_, _| rng.uniform_range(-limit, limit));
            let activation = if i + 2 == dims.len() { output } else { hidden };
            layers.push(Layer {
                weights,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
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
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        Ok(())
    }

    fn layer_forward(layer: &Layer, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul(&layer.weights)?;
        let act = layer.activation;
        let out = layer.out_dim();
        for i in 0..z.rows() {
            let row = z.row_mut(i);
            for j in 0..out {
                row[j] = act.apply(row[j] + layer.bias[j]);
            }
        }
        Ok(z)
    }

    /// Forward pass without recording a cache.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut h = Self::layer_forward(&self.layers[0], input)?;
        for layer in &self.layers[1..] {
            h = Self::layer_forward(layer, &h)?;
        }
        Ok(h)
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut h = input.clone();
        for layer in &self.layers {
            let next = Self::layer_forward(layer, &h)?;
            inputs.push(h);
            outputs.push(next.clone());
            h = next;
        }
        Ok((h, ForwardCache { inputs, outputs }))
    }

    fn check_cache(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<()> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::Usage(format!(
                "cache has {} layers, network has {}",
                cache.inputs.len(),
                self.layers.len()
            )));
        }
        for (i, (l, (inp, out))) in self
            .layers
            .iter()
            .zip(cache.inputs.iter().zip(&cache.outputs))
            .enumerate()
        {
            if inp.cols() != l.in_dim() || out.cols() != l.out_dim() || inp.rows() != out.rows() {
                return Err(Error::Usage(format!("cache does not match layer {i}")));
            }
        }
        let last = &cache.outputs[cache.outputs.len() - 1];
        if last.shape() != output_gradient.shape() {
            return Err(Error::Usage(format!(
                "output gradient {:?} does not match cached output {:?}",
                output_gradient.shape(),
                last.shape()
            )));
        }
        Ok(())
    }

    /// Backpropagates `output_gradient` (dLoss/dOutput) through the cached
    /// pass, returning parameter gradients and dLoss/dInput.
    pub fn backward(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<(MlpGrads, Matrix)> {
        self.check_cache(cache, output_gradient)?;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_gradient.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.outputs[idx];
            let act = layer.activation;
            for (g, &y) in upstream.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *g *= act.derivative_from_output(y);
            }
            let dw = cache.inputs[idx].transpose_matmul(&upstream)?;
            let db = upstream.column_sums();
            let dx = upstream.matmul_transpose(&layer.weights)?;
            grads.push(LayerGrad {
                weights: dw,
                bias: db,
            });
            upstream = dx;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, upstream))
    }

    /// In-place `θ ← θ − lr·∇θ`. Rejects non-finite gradients without
    /// touching the parameters.
    pub fn sgd_step(&mut self, grads: &MlpGrads, learning_rate: f64) -> Result<()> {
        self.check_grads(grads)?;
        if !grads.is_finite() {
            return Err(Error::Divergence("non-finite gradient in SGD step".into()));
        }
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.axpy(-learning_rate, &g.weights)?;
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
        Ok(())
    }

    fn check_grads(&self, grads: &MlpGrads) -> Result<()> {
        let ok = grads.layers.len() == self.layers.len()
            && self.layers.iter().zip(&grads.layers).all(|(l, g)| {
                l.weights.shape() == g.weights.shape() && l.bias.len() == g.bias.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::dim("gradient shapes do not match parameters"))
        }
    }

    /// Parameter `k` in flat order (per layer: weights row-major, then bias).
    pub fn param(&self, mut k: usize) -> f64 {
        for l in &self.layers {
            let nw = l.weights.as_slice().len();
            if k < nw {
                return l.weights.as_slice()[k];
            }
            k -= nw;
            if k < l.bias.len() {
                return l.bias[k];
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            if k < nw {
                return &mut l.weights.as_mut_slice()[k];
            }
            k -= nw;
            if k < l.bias.len() {
                return &mut l.bias[k];
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range")
    }
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.in_dim(), l.out_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.is_finite() && g.bias.iter().all(|b| b.is_finite()))
    }

    pub fn add_assign(&mut self, other: &MlpGrads) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::dim("gradient layer counts differ"));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.axpy(1.0, &b.weights)?;
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.layers {
            for w in g.weights.as_mut_slice() {
                *w *= s;
            }
            for b in &mut g.bias {
                *b *= s;
            }
        }
    }

    /// Flat view in the same order as [`MlpParams::param`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

/// Free-function form of [`MlpParams::forward`].
pub fn mlp_forward(params: &MlpParams, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
    params.forward(input)
}

/// Free-function form of [`MlpParams::backward`].
pub fn mlp_backward(params: &MlpParams, cache: &ForwardCache, output_gradient: &Matrix) -> Result<(MlpGrads, Matrix)> {
    params.backward(cache, output_gradient)
}

/// Returns a copy of `params` after one SGD step.
pub fn sgd_step(params: &MlpParams, gradients: &MlpGrads, learning_rate: f64) -> Result<MlpParams> {
    let mut next = params.clone();
    next.sgd_step(gradients, learning_rate)?;
    Ok(next)
}
