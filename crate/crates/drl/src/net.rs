//! Fully connected ReLU network with a flat parameter vector and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::DrlError;

/// Adam moment estimates, laid out like [`Mlp::params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn zeros(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step_count: 0 }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// ReLU on hidden layers, identity on the output.
///
/// Layer `k` maps `dims[k]` to `dims[k+1]`; its weights are stored row-major
/// (`out x in`) followed by the biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub params: Vec<f64>,
    pub adam: AdamState,
}

/// Per-layer activations kept for the backward pass.
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace has the input layer at least")
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self, DrlError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(DrlError::Config(format!("bad layer sizes {dims:?}")));
        }
        let n = param_count(dims);
        Ok(Self { dims: dims.to_vec(), params: vec![0.0; n], adam: AdamState::zeros(n) })
    }

    /// He-uniform weights, zero biases.
    pub fn new<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self, DrlError> {
        let mut net = Self::zeros(dims)?;
        let mut off = 0;
        for w in dims.windows(2) {
            let limit = (6.0 / w[0] as f64).sqrt();
            for p in &mut net.params[off..off + w[0] * w[1]] {
                *p = rng.gen_range(-limit..limit);
            }
            off += w[0] * w[1] + w[1];
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        param_count(&self.dims[..=layer])
    }

    /// Weights (row-major, `out x in`) and biases of one layer.
    pub fn layer(&self, k: usize) -> (&[f64], &[f64]) {
        let off = self.offset(k);
        let (i, o) = (self.dims[k], self.dims[k + 1]);
        (&self.params[off..off + i * o], &self.params[off + i * o..off + i * o + o])
    }

    pub fn layer_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let off = self.offset(k);
        let (i, o) = (self.dims[k], self.dims[k + 1]);
        let (w, rest) = self.params[off..off + i * o + o].split_at_mut(i * o);
        (w, rest)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DrlError> {
        Ok(self.forward_trace(x)?.acts.pop().unwrap())
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace, DrlError> {
        if x.len() != self.input_dim() {
            return Err(DrlError::Dimension { expected: self.input_dim(), got: x.len() });
        }
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        let last = self.num_layers() - 1;
        for k in 0..self.num_layers() {
            let (w, b) = self.layer(k);
            let n_in = self.dims[k];
            let input = acts.last().unwrap();
            let mut out = b.to_vec();
            for (o, row) in out.iter_mut().zip(w.chunks_exact(n_in)) {
                *o += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if k != last && *o < 0.0 {
                    *o = 0.0;
                }
            }
            acts.push(out);
        }
        Ok(Trace { acts })
    }

    /// Accumulate `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        let mut delta = d_out.to_vec();
        for k in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.dims[k], self.dims[k + 1]);
            let off = self.offset(k);
            let input = &trace.acts[k];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[off + n_in * n_out + o] += d;
            }
            if k == 0 {
                break;
            }
            let (w, _) = self.layer(k);
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, &wij) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *p += d * wij;
                }
            }
            // ReLU derivative, taken as 0 at the kink
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    /// One Adam step with the standard bias correction.
    pub fn adam_update(&mut self, grads: &[f64], lr: f64) {
        assert_eq!(grads.len(), self.params.len(), "gradient shape");
        let a = &mut self.adam;
        a.step_count += 1;
        let t = a.step_count as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..grads.len() {
            let g = grads[i];
            a.m[i] = ADAM_BETA1 * a.m[i] + (1.0 - ADAM_BETA1) * g;
            a.v[i] = ADAM_BETA2 * a.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = a.m[i] / c1;
            let v_hat = a.v[i] / c2;
            self.params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.dims == other.dims
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}
