//! Classical network `h(s)` over bit strings and its training.
//!
//! The network is a per-string embedding table followed by three ReLU
//! layers and a scalar head. Since the costs need `h` on every string (the
//! normalization term runs over all `2^n` outcomes), forward and backward
//! passes are done on the whole table at once.

pub mod adam;
pub mod cost;
pub mod snapshot;
pub mod train;

use ndarray::{Array1, Array2, Axis};
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::ansatz::BitString;
use crate::error::{Error, Result};
use crate::seed::rng_from;

pub use cost::{cost_renyi, cost_vn, invert_cost_renyi, Objective};
pub use train::{train, EvalPoint, NnResult, Sample, TrainConfig};

pub const HIDDEN_LAYERS: usize = 3;

/// Largest register for which the per-string embedding table is allowed.
pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub embed_dim: usize,
    pub hidden_width: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden_width: 256,
        }
    }
}

/// Affine map `x W + b` with `W` stored as `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyNet {
    n_qubits: usize,
    pub embedding: Array2<f64>,
    pub hidden: Vec<Dense>,
    pub head: Dense,
}

/// Activations of a full-table forward pass, kept for backpropagation.
pub struct ForwardCache {
    /// Pre-activations of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Post-ReLU activations of each hidden layer.
    post: Vec<Array2<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

impl EntropyNet {
    /// He-uniform weights, zero biases, unit-variance uniform embedding.
    pub fn new(n_qubits: usize, cfg: NetConfig, seed: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "embedding table supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        if cfg.embed_dim == 0 || cfg.hidden_width == 0 {
            return Err(Error::Argument("network dimensions must be positive".into()));
        }
        let mut rng = rng_from(seed);
        let mut uniform = |shape: (usize, usize), bound: f64| {
            Array2::from_shape_fn(shape, |_| (2.0 * rng.random::<f64>() - 1.0) * bound)
        };
        let embedding = uniform((1 << n_qubits, cfg.embed_dim), 3f64.sqrt());
        let mut hidden = Vec::with_capacity(HIDDEN_LAYERS);
        let mut fan_in = cfg.embed_dim;
        for _ in 0..HIDDEN_LAYERS {
            let mut d = Dense::zeros(fan_in, cfg.hidden_width);
            d.weight = uniform((fan_in, cfg.hidden_width), (6.0 / fan_in as f64).sqrt());
            hidden.push(d);
            fan_in = cfg.hidden_width;
        }
        let mut head = Dense::zeros(fan_in, 1);
        head.weight = uniform((fan_in, 1), (6.0 / fan_in as f64).sqrt());
        Ok(Self {
            n_qubits,
            embedding,
            hidden,
            head,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn config(&self) -> NetConfig {
        NetConfig {
            embed_dim: self.embedding.ncols(),
            hidden_width: self.head.weight.nrows(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Same shapes, all zeros. Used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Self {
        let z = |d: &Dense| Dense::zeros(d.weight.nrows(), d.weight.ncols());
        Self {
            n_qubits: self.n_qubits,
            embedding: Array2::zeros(self.embedding.raw_dim()),
            hidden: self.hidden.iter().map(z).collect(),
            head: z(&self.head),
        }
    }

    /// Named parameter tensors in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = vec![(
            "embedding".to_string(),
            self.embedding.shape().to_vec(),
            self.embedding.as_slice().expect("standard layout"),
        )];
        let layers = self
            .hidden
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("hidden.{i}"), d))
            .chain(std::iter::once(("head".to_string(), &self.head)));
        for (name, d) in layers {
            out.push((
                format!("{name}.weight"),
                d.weight.shape().to_vec(),
                d.weight.as_slice().expect("standard layout"),
            ));
            out.push((
                format!("{name}.bias"),
                d.bias.shape().to_vec(),
                d.bias.as_slice().expect("standard layout"),
            ));
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.named_tensors().into_iter().map(|(_, _, t)| t).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for d in self.hidden.iter_mut().chain(std::iter::once(&mut self.head)) {
            out.push(d.weight.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// `h(s)` for a single string.
    pub fn forward(&self, s: &BitString) -> Result<f64> {
        if s.n_qubits() != self.n_qubits {
            return Err(Error::Argument(format!(
                "string has {} bits, network expects {}",
                s.n_qubits(),
                self.n_qubits
            )));
        }
        let mut x = self
            .embedding
            .row(s.index())
            .to_owned()
            .insert_axis(Axis(0));
        for d in &self.hidden {
            x = relu(&d.forward(&x));
        }
        Ok(self.head.forward(&x)[(0, 0)])
    }

    /// Forward pass over every string, caching activations.
    pub fn forward_all(&self) -> ForwardCache {
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.hidden.len());
        for d in &self.hidden {
            let input = post.last().unwrap_or(&self.embedding);
            let z = d.forward(input);
            post.push(relu(&z));
            pre.push(z);
        }
        let out = self.head.forward(post.last().expect("three hidden layers"));
        ForwardCache {
            pre,
            post,
            output: out.column(0).to_vec(),
        }
    }

    /// `h` on every string, in index order.
    pub fn h_table(&self) -> Vec<f64> {
        self.forward_all().output
    }

    /// Backpropagate `∂C/∂h` (one entry per string) into parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, dh: &[f64]) -> EntropyNet {
        let mut g = self.zeros_like();
        let rows = dh.len();
        let mut delta = Array2::from_shape_vec((rows, 1), dh.to_vec()).expect("column shape");
        let last = cache.post.last().expect("three hidden layers");
        g.head.weight = standard(last.t().dot(&delta));
        g.head.bias = delta.sum_axis(Axis(0));
        let mut upstream = delta.dot(&self.head.weight.t());
        for i in (0..self.hidden.len()).rev() {
            delta = upstream;
            ndarray::Zip::from(&mut delta)
                .and(&cache.pre[i])
                .for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            let input = if i == 0 {
                &self.embedding
            } else {
                &cache.post[i - 1]
            };
            g.hidden[i].weight = standard(input.t().dot(&delta));
            g.hidden[i].bias = delta.sum_axis(Axis(0));
            upstream = delta.dot(&self.hidden[i].weight.t());
        }
        g.embedding = standard(upstream);
        g
    }

    /// Cost on the given weights and its gradient with respect to every parameter.
    pub fn cost_and_gradient(&self, objective: Objective, weights: &[f64]) -> Result<(f64, EntropyNet)> {
        let cache = self.forward_all();
        let c = objective.cost(cache.output(), weights)?;
        let dh = objective.grad_h(cache.output(), weights)?;
        Ok((c, self.backward(&cache, &dh)))
    }

    /// Flattened parameters, in `tensors()` order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Overwrite parameters from a flat vector in `tensors()` order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Argument(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Zero the head so that `h ≡ 0`.
    pub fn zero_head(&mut self) {
        self.head.weight.fill(0.0);
        self.head.bias.fill(0.0);
    }
}
