//! A small fully connected network with exact reverse-mode gradients and Adam.
//!
//! Layer `k` holds a `fan_in × fan_out` weight matrix, so the column count of
//! layer `k` equals the row count of layer `k + 1`. Batches are row-major:
//! one sample per row, `y = x·W + b`.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite weight in layer {0}")]
    NonFiniteWeight(usize),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Identity,
    Sigmoid,
}

/// Half an ulp of 1.0. Sigmoid outputs are kept in `[SIGMOID_MARGIN, 1 − SIGMOID_MARGIN]`
/// so that they never round to exactly 0 or 1.
const SIGMOID_MARGIN: f64 = f64::EPSILON / 2.0;

fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(SIGMOID_MARGIN, 1.0 - SIGMOID_MARGIN)
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl Head {
    fn apply(self, x: f64) -> f64 {
        match self {
            Head::Identity => x,
            Head::Sigmoid => sigmoid(x),
        }
    }

    fn derivative(self, y: f64) -> f64 {
        match self {
            Head::Identity => 1.0,
            Head::Sigmoid => y * (1.0 - y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpCheckpoint", try_from = "MlpCheckpoint")]
pub struct Mlp {
    layers: Vec<Dense>,
    hidden: Activation,
    head: Head,
}

/// Activations recorded by [`Mlp::forward_cached`] for a later backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
    /// Gradient with respect to the network input.
    pub input: Array2<f64>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    /// Accumulate parameter gradients from another pass over the same network.
    /// The input gradient is left untouched.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }
}

impl Mlp {
    /// Seeded initialization: He-uniform for ReLU hidden layers, Xavier-uniform
    /// for tanh hidden layers and for the output layer. Biases start at zero.
    pub fn new(widths: &[usize], hidden: Activation, head: Head, rng: &mut SimRng) -> Result<Self, NnError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(NnError::InvalidArchitecture(format!("widths {widths:?}")));
        }
        let depth = widths.len() - 1;
        let layers = (0..depth)
            .map(|k| {
                let (fan_in, fan_out) = (widths[k], widths[k + 1]);
                let limit = if k + 1 < depth && hidden == Activation::Relu {
                    (6.0 / fan_in as f64).sqrt()
                } else {
                    (6.0 / (fan_in + fan_out) as f64).sqrt()
                };
                let weights = Array2::from_shape_fn((fan_in, fan_out), |_| (2.0 * rng.uniform() - 1.0) * limit);
                Dense {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers, hidden, head })
    }

    pub fn from_layers(layers: Vec<Dense>, hidden: Activation, head: Head) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::InvalidArchitecture("no layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.ncols() {
                return Err(NnError::ShapeMismatch {
                    context: "bias width",
                    expected: l.weights.ncols(),
                    got: l.bias.len(),
                });
            }
            if k > 0 && layers[k - 1].weights.ncols() != l.weights.nrows() {
                return Err(NnError::ShapeMismatch {
                    context: "layer composition",
                    expected: layers[k - 1].weights.ncols(),
                    got: l.weights.nrows(),
                });
            }
            if !l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()) {
                return Err(NnError::NonFiniteWeight(k));
            }
        }
        Ok(Self { layers, hidden, head })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn hidden(&self) -> Activation {
        self.hidden
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].weights.nrows()];
        w.extend(self.layers.iter().map(|l| l.weights.ncols()));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_width() {
            return Err(NnError::ShapeMismatch {
                context: "network input",
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights);
            z += &l.bias;
            if k == last {
                z.mapv_inplace(|v| self.head.apply(v));
            } else {
                z.mapv_inplace(|v| self.hidden.apply(v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights);
            z += &l.bias;
            let next = if k == last {
                z.mapv(|v| self.head.apply(v))
            } else {
                z.mapv(|v| self.hidden.apply(v))
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: a,
        })
    }

    /// Gradients of a scalar loss given `upstream = ∂loss/∂output`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Array2<f64>) -> Result<Gradients, NnError> {
        if cache.inputs.len() != self.layers.len() || upstream.dim() != cache.output.dim() {
            return Err(NnError::ShapeMismatch {
                context: "upstream gradient",
                expected: cache.output.len(),
                got: upstream.len(),
            });
        }
        let mut delta = upstream.clone();
        delta.zip_mut_with(&cache.output, |d, &y| *d *= self.head.derivative(y));

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let a_in = &cache.inputs[k];
            let weights = a_in.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            let mut d_in = delta.dot(&self.layers[k].weights.t());
            if k > 0 {
                let z = &cache.pre[k - 1];
                let hidden = self.hidden;
                ndarray::Zip::from(&mut d_in)
                    .and(z)
                    .and(a_in)
                    .for_each(|d, &z, &a| *d *= hidden.derivative(z, a));
            }
            grads.push(Dense { weights, bias });
            delta = d_in;
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: delta,
        })
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn assign_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::ShapeMismatch {
                context: "parameter vector",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// In-place Adam update of every parameter.
    pub fn apply_adam(&mut self, grads: &Gradients, state: &mut AdamState) -> Result<(), NnError> {
        if grads.layers.len() != self.layers.len() {
            return Err(NnError::ShapeMismatch {
                context: "gradient layers",
                expected: self.layers.len(),
                got: grads.layers.len(),
            });
        }
        let count = self.param_count();
        if state.m.len() != count {
            return Err(NnError::ShapeMismatch {
                context: "optimizer state",
                expected: count,
                got: state.m.len(),
            });
        }
        if !grads.is_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        state.step += 1;
        let (c1, c2) = state.bias_corrections();
        let mut offset = 0;
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            if l.weights.dim() != g.weights.dim() || l.bias.len() != g.bias.len() {
                return Err(NnError::ShapeMismatch {
                    context: "gradient shape",
                    expected: l.weights.len(),
                    got: g.weights.len(),
                });
            }
            for (p, gv) in l.weights.iter_mut().zip(g.weights.iter()).chain(l.bias.iter_mut().zip(g.bias.iter())) {
                state.update_one(offset, p, *gv, c1, c2);
                offset += 1;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            config,
        }
    }

    pub fn for_network(net: &Mlp, config: AdamConfig) -> Self {
        Self::new(net.param_count(), config)
    }

    fn bias_corrections(&self) -> (f64, f64) {
        let t = self.step as i32;
        (1.0 - self.config.beta1.powi(t), 1.0 - self.config.beta2.powi(t))
    }

    fn update_one(&mut self, i: usize, p: &mut f64, g: f64, c1: f64, c2: f64) {
        let cfg = self.config;
        self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
        self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = self.m[i] / c1;
        let v_hat = self.v[i] / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Adam with bias correction over a flat parameter vector.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NnError::ShapeMismatch {
            context: "adam step",
            expected: state.m.len(),
            got: grads.len(),
        });
    }
    if !grads.iter().all(|g| g.is_finite()) {
        return Err(NnError::NonFiniteGradient);
    }
    state.step += 1;
    let (c1, c2) = state.bias_corrections();
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        state.update_one(i, p, *g, c1, c2);
    }
    Ok(())
}

/// On-disk checkpoint: shapes plus row-major weight arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub hidden_activation: Activation,
    pub output_activation: Head,
    pub layers: Vec<LayerCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl From<Mlp> for MlpCheckpoint {
    fn from(net: Mlp) -> Self {
        Self {
            hidden_activation: net.hidden,
            output_activation: net.head,
            layers: net
                .layers
                .iter()
                .map(|l| LayerCheckpoint {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MlpCheckpoint> for Mlp {
    type Error = NnError;

    fn try_from(ck: MlpCheckpoint) -> Result<Self, NnError> {
        let layers = ck
            .layers
            .into_iter()
            .map(|l| {
                let got = l.weights.len();
                let weights = Array2::from_shape_vec((l.rows, l.cols), l.weights).map_err(|_| NnError::ShapeMismatch {
                    context: "checkpoint weights",
                    expected: l.rows * l.cols,
                    got,
                })?;
                Ok(Dense {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<Vec<_>, NnError>>()?;
        Mlp::from_layers(layers, ck.hidden_activation, ck.output_activation)
    }
}
