//! Dense feedforward networks.
//!
//! A [`Network`] is a stack of fully connected layers sharing one activation.
//! Each node computes `act(Σ w_i x_i + w_T)` where `w_T` is the node's
//! threshold. Parameters flatten layer-major, and within each layer the
//! weight matrix (row-major, one row per output node) comes before the
//! thresholds. [`GradientVector`], the optimiser and the weight-file format
//! all use this order.
//!
//! [`BinaryNetwork`] is the 5-input, 3-output, ±1-weight, threshold-free
//! network family used by the exhaustive search in [`crate::binexp`].

use std::ops::{Deref, DerefMut};

use rand::Rng;

use crate::{Error, Result};

/// Pre-activations beyond this magnitude saturate the sigmoid exactly.
pub const SIGMOID_SATURATION: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Identity,
    /// Hard limiter: `+1` if the pre-activation is positive, else `-1`.
    /// Not differentiable; backpropagation treats its derivative as zero.
    Sign,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
            Activation::Sign => "sign",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "identity" => Some(Activation::Identity),
            "sign" => Some(Activation::Sign),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
            Activation::Sign => {
                if z > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
            Activation::Sign => 0.0,
        }
    }
}

/// Logistic function in the branch form that never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= SIGMOID_SATURATION {
        1.0
    } else if z <= -SIGMOID_SATURATION {
        0.0
    } else if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    weights: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Layer {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidInput("layer dimensions must be positive".into()));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                expected: in_dim * out_dim,
                got: weights.len(),
            });
        }
        if thresholds.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: thresholds.len(),
            });
        }
        Ok(Layer {
            in_dim,
            out_dim,
            weights,
            thresholds,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Result<Self> {
        Layer::new(in_dim, out_dim, vec![0.0; in_dim * out_dim], vec![0.0; out_dim])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn weight(&self, node: usize, input: usize) -> f64 {
        self.weights[node * self.in_dim + input]
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.thresholds.len()
    }

    fn apply_into(&self, act: Activation, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, &t) in self.weights.chunks_exact(self.in_dim).zip(&self.thresholds) {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + t;
            out.push(act.apply(z));
        }
    }
}

/// Gradient of a scalar loss with respect to a network's flattened
/// parameters (see the module docs for the order).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GradientVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    Squared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    activation: Activation,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].out_dim,
                    got: pair[1].in_dim,
                });
            }
        }
        Ok(Network { layers, activation })
    }

    /// All-zero network with node counts `dims = [in, hidden.., out]`.
    pub fn zeros(dims: &[usize], activation: Activation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least input and output dimensions".into(),
            ));
        }
        let layers = dims
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Network::from_layers(layers, activation)
    }

    /// Network with every parameter drawn uniformly from `[lo, hi)`.
    pub fn random<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Network::zeros(dims, activation)?;
        let params: Vec<f64> = (0..net.num_params()).map(|_| rng.gen_range(lo..hi)).collect();
        net.set_params(&params)?;
        Ok(net)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    /// Node counts `[in, hidden.., out]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.thresholds);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nt = l.thresholds.len();
            l.thresholds.copy_from_slice(&params[offset..offset + nt]);
            offset += nt;
        }
        Ok(())
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut net = self.clone();
        net.set_params(params)?;
        Ok(net)
    }

    /// Per-parameter magnitude caps: `weight_cap` for weights and
    /// `threshold_cap` for thresholds, in flattening order.
    pub fn param_caps(&self, weight_cap: f64, threshold_cap: f64) -> Vec<f64> {
        let mut caps = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            caps.extend(std::iter::repeat_n(weight_cap, l.weights.len()));
            caps.extend(std::iter::repeat_n(threshold_cap, l.thresholds.len()));
        }
        caps
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            l.apply_into(self.activation, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass keeping every layer's activations; element 0 is the input.
    pub fn trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for l in &self.layers {
            let mut out = Vec::with_capacity(l.out_dim);
            l.apply_into(self.activation, acts.last().unwrap(), &mut out);
            acts.push(out);
        }
        Ok(acts)
    }

    /// Reverse accumulation through a recorded [`trace`](Self::trace).
    ///
    /// Adds `∂L/∂params` to `grad` given `d_out = ∂L/∂output`, and returns
    /// `∂L/∂input`. `grad` must have length [`num_params`](Self::num_params).
    pub fn backward(&self, acts: &[Vec<f64>], d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(acts.len(), self.layers.len() + 1);
        debug_assert_eq!(grad.len(), self.num_params());
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.num_params();
        }
        let mut delta_out: Vec<f64> = d_out.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let a_in = &acts[k];
            let a_out = &acts[k + 1];
            // ∂L/∂z for this layer's nodes
            let dz: Vec<f64> = delta_out
                .iter()
                .zip(a_out)
                .map(|(d, &a)| d * self.activation.derivative_from_output(a))
                .collect();
            let base = offsets[k];
            let nw = l.weights.len();
            for (node, &dzn) in dz.iter().enumerate() {
                let row = &mut grad[base + node * l.in_dim..base + (node + 1) * l.in_dim];
                for (g, &xin) in row.iter_mut().zip(a_in) {
                    *g += dzn * xin;
                }
                grad[base + nw + node] += dzn;
            }
            let mut d_in = vec![0.0; l.in_dim];
            for (node, &dzn) in dz.iter().enumerate() {
                let row = &l.weights[node * l.in_dim..(node + 1) * l.in_dim];
                for (di, &w) in d_in.iter_mut().zip(row) {
                    *di += dzn * w;
                }
            }
            delta_out = d_in;
        }
        delta_out
    }
}

/// Evaluates `net` at `x`.
pub fn forward(net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

/// Squared error of a scalar-output network and its parameter gradient.
pub fn loss_and_gradient(net: &Network, x: &[f64], y: f64, loss: Loss) -> Result<(f64, GradientVector)> {
    if net.out_dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: net.out_dim(),
        });
    }
    let acts = net.trace(x)?;
    let out = acts.last().unwrap()[0];
    let mut grad = GradientVector::zeros(net.num_params());
    let value = match loss {
        Loss::Squared => {
            let e = out - y;
            net.backward(&acts, &[2.0 * e], &mut grad);
            e * e
        }
    };
    Ok((value, grad))
}

/// Number of inputs of a [`BinaryNetwork`].
pub const BINARY_INPUTS: usize = 5;
/// Number of outputs of a [`BinaryNetwork`].
pub const BINARY_OUTPUTS: usize = 3;
/// Size of the binary network family, `2^15`.
pub const BINARY_FAMILY_SIZE: usize = 1 << (BINARY_INPUTS * BINARY_OUTPUTS);

/// Five-input, three-output network with ±1 weights, no thresholds and the
/// hard limiter `θ(t) = 1 if t > 0 else -1`.
///
/// Networks are numbered by a 15-bit index: bit `5·r + c` set means the
/// weight from input `c` to output `r` is `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryNetwork {
    index: u16,
}

impl BinaryNetwork {
    pub fn from_index(index: usize) -> Result<Self> {
        if index >= BINARY_FAMILY_SIZE {
            return Err(Error::InvalidInput(format!(
                "binary network index {index} out of range"
            )));
        }
        Ok(BinaryNetwork { index: index as u16 })
    }

    pub fn from_weights(weights: [[i8; BINARY_INPUTS]; BINARY_OUTPUTS]) -> Result<Self> {
        let mut index = 0usize;
        for (r, row) in weights.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                match w {
                    1 => index |= 1 << (r * BINARY_INPUTS + c),
                    -1 => {}
                    _ => return Err(Error::InvalidInput(format!("weight {w} is not ±1"))),
                }
            }
        }
        BinaryNetwork::from_index(index)
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn weight(&self, output: usize, input: usize) -> i8 {
        if self.index >> (output * BINARY_INPUTS + input) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn weights(&self) -> [[i8; BINARY_INPUTS]; BINARY_OUTPUTS] {
        let mut w = [[0i8; BINARY_INPUTS]; BINARY_OUTPUTS];
        for (r, row) in w.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.weight(r, c);
            }
        }
        w
    }

    /// Output code for a packed input: bit `c` of `input_bits` set means
    /// `x_c = +1`. Bit `r` of the result set means output `r` is `+1`.
    #[inline]
    pub fn code_of_bits(&self, input_bits: usize) -> u8 {
        let mut code = 0u8;
        for r in 0..BINARY_OUTPUTS {
            let row = (self.index as usize >> (r * BINARY_INPUTS)) & 0b11111;
            // agreements minus disagreements between row and input signs
            let agree = (!(row ^ input_bits) & 0b11111).count_ones() as i32;
            let sum = 2 * agree - BINARY_INPUTS as i32;
            if sum > 0 {
                code |= 1 << r;
            }
        }
        code
    }

    /// The 32-entry table of output codes over all packed inputs.
    pub fn code_table(&self) -> [u8; 1 << BINARY_INPUTS] {
        let mut t = [0u8; 1 << BINARY_INPUTS];
        for (bits, c) in t.iter_mut().enumerate() {
            *c = self.code_of_bits(bits);
        }
        t
    }
}

/// Packs a ±1 vector into input bits (`+1` ↦ set bit).
pub fn pack_pm1(x: &[f64]) -> Result<usize> {
    if x.len() != BINARY_INPUTS {
        return Err(Error::DimensionMismatch {
            expected: BINARY_INPUTS,
            got: x.len(),
        });
    }
    let mut bits = 0;
    for (c, &v) in x.iter().enumerate() {
        if v == 1.0 {
            bits |= 1 << c;
        } else if v != -1.0 {
            return Err(Error::InvalidInput(format!("input component {v} is not ±1")));
        }
    }
    Ok(bits)
}

/// Unpacks input bits into a ±1 vector.
pub fn unpack_pm1(bits: usize) -> Vec<f64> {
    (0..BINARY_INPUTS)
        .map(|c| if bits >> c & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Evaluates a binary network on a ±1 input vector.
pub fn binary_forward(net: &BinaryNetwork, x: &[f64]) -> Result<[f64; BINARY_OUTPUTS]> {
    let code = net.code_of_bits(pack_pm1(x)?);
    let mut out = [-1.0; BINARY_OUTPUTS];
    for (r, o) in out.iter_mut().enumerate() {
        if code >> r & 1 == 1 {
            *o = 1.0;
        }
    }
    Ok(out)
}
