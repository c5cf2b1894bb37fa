//! Dense multilayer perceptron over a flat parameter vector.
//!
//! Layer `l` stores `W_l` (in x out, row-major) followed by `b_l`. Batches are
//! row-major `batch x width` matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => math::tanh(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `c = beta c + op(a) op(b)` with `op(a)` of shape `m x k`, `op(b)` of
/// shape `k x n`, all stored row-major before the optional transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n, "gemm shape mismatch");
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserted lengths cover every index reachable from the
    // given shapes and strides, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Activations of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    batch: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache has at least the input")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl Mlp {
    /// Zero-initialised network with layer widths `sizes` (input first).
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output width");
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params: vec![0.0; count],
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn in_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Offsets of `W_l` and `b_l` in the flat vector.
    fn offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(layer) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.sizes[layer] * self.sizes[layer + 1])
    }

    /// Orthogonal weights scaled by `hidden_gain` (hidden layers) and
    /// `output_gain` (last layer); zero biases.
    pub fn init_orthogonal<R: Rng + ?Sized>(&mut self, rng: &mut R, hidden_gain: f64, output_gain: f64) {
        self.params.iter_mut().for_each(|p| *p = 0.0);
        for l in 0..self.layers() {
            let (rows, cols) = (self.sizes[l], self.sizes[l + 1]);
            let gain = if l + 1 == self.layers() { output_gain } else { hidden_gain };
            let q = orthogonal(rng, rows, cols);
            let (w, _) = self.offsets(l);
            for (p, v) in self.params[w..w + rows * cols].iter_mut().zip(q) {
                *p = gain * v;
            }
        }
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Cache {
        assert_eq!(input.len(), batch * self.in_dim(), "input width mismatch");
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.offsets(l);
            let mut z = vec![0.0; batch * fan_out];
            for row in z.chunks_exact_mut(fan_out) {
                row.copy_from_slice(&self.params[b..b + fan_out]);
            }
            gemm(batch, fan_in, fan_out, &acts[l], false, &self.params[w..b], false, 1.0, &mut z);
            let act = self.activation(l);
            if act != Activation::Identity {
                z.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            acts.push(z);
        }
        Cache { batch, acts }
    }

    /// Output for a single input row.
    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = self.forward(input, 1);
        cache.acts.pop().unwrap()
    }

    /// Reverse pass for `d loss / d output = upstream`. Parameter gradients
    /// are accumulated into `grad` and input gradients written to `d_input`,
    /// each only when requested.
    pub fn backward(&self, cache: &Cache, upstream: &[f64], mut grad: Option<&mut [f64]>, d_input: Option<&mut [f64]>) {
        let batch = cache.batch;
        assert_eq!(upstream.len(), batch * self.out_dim(), "upstream width mismatch");
        if let Some(g) = grad.as_deref() {
            assert_eq!(g.len(), self.params.len(), "gradient length mismatch");
        }
        let mut delta = upstream.to_vec();
        for l in (0..self.layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.activation(l);
            if act != Activation::Identity {
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    *d *= act.slope(*a);
                }
            }
            let (w, b) = self.offsets(l);
            if let Some(g) = grad.as_deref_mut() {
                gemm(fan_in, batch, fan_out, &cache.acts[l], true, &delta, false, 1.0, &mut g[w..b]);
                for row in delta.chunks_exact(fan_out) {
                    for (gb, d) in g[b..b + fan_out].iter_mut().zip(row) {
                        *gb += d;
                    }
                }
            }
            if l == 0 && d_input.is_none() {
                break;
            }
            let mut prev = vec![0.0; batch * fan_in];
            gemm(batch, fan_out, fan_in, &delta, false, &self.params[w..b], true, 0.0, &mut prev);
            delta = prev;
        }
        if let Some(out) = d_input {
            out.copy_from_slice(&delta);
        }
    }

    /// `self = rho self + (1 - rho) other`.
    pub fn polyak_from(&mut self, other: &Mlp, rho: f64) {
        assert_eq!(self.params.len(), other.params.len());
        for (t, o) in self.params.iter_mut().zip(&other.params) {
            *t = rho * *t + (1.0 - rho) * o;
        }
    }
}

/// Row-major `rows x cols` matrix with orthonormal rows or columns
/// (whichever is shorter), from Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Vec<f64> {
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // `short` vectors of length `long`.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for q in &basis {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let n = math::norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|a| *a /= n);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for (j, q) in basis.iter().enumerate() {
        for (i, &x) in q.iter().enumerate() {
            if rows >= cols {
                out[i * cols + j] = x;
            } else {
                out[j * cols + i] = x;
            }
        }
    }
    out
}
