//! Fully connected tanh network with a linear output layer and hand-written
//! backprop. Parameters live in one flat vector so optimizers and gradient
//! checks can treat them uniformly.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Layer activations from a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(
            sizes.len() >= 2,
            "an MLP needs at least input and output sizes"
        );
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// Glorot-uniform weights and zero biases. With `zero_output` the last
    /// layer starts at zero so the initial output is exactly 0.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R, zero_output: bool) -> Self {
        let mut net = Self::zeros(sizes);
        let layers = net.layers();
        for k in 0..layers {
            if zero_output && k + 1 == layers {
                continue;
            }
            let (n_in, n_out) = (sizes[k], sizes[k + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let (w, _) = net.offsets(k);
            for p in &mut net.params[w..w + n_in * n_out] {
                *p = rng.gen_range(-limit..limit);
            }
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == param_count(sizes)).then(|| Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of the weight matrix (row-major, out x in) and bias of layer `k`.
    fn offsets(&self, k: usize) -> (usize, usize) {
        let before = param_count(&self.sizes[..=k]);
        (before, before + self.sizes[k] * self.sizes[k + 1])
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        debug_assert_eq!(x.len(), self.sizes[0]);
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        for k in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let (w, b) = self.offsets(k);
            let input = &acts[k];
            let last = k + 1 == self.layers();
            let out: Vec<f64> = (0..n_out)
                .map(|j| {
                    let row = &self.params[w + j * n_in..w + (j + 1) * n_in];
                    let z =
                        self.params[b + j] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        ForwardCache { acts }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).acts.pop().unwrap_or_default()
    }

    /// Adds `d(grad_out . output)/d(params)` into `grad`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let mut delta = grad_out.to_vec();
        for k in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let (w, b) = self.offsets(k);
            let input = &cache.acts[k];
            for j in 0..n_out {
                let dj = delta[j];
                if dj == 0.0 {
                    continue;
                }
                grad[b + j] += dj;
                let row = &mut grad[w + j * n_in..w + (j + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += dj * a;
                }
            }
            if k > 0 {
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out)
                            .map(|j| self.params[w + j * n_in + i] * delta[j])
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }
}
