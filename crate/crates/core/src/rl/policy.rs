//! Squashed-Gaussian policy over one bounded acceleration.
//!
//! The network outputs a pre-squash mean `mu`; a sample is `u ~ N(mu, sigma)`
//! and the action is `scale * tanh(u)`. Log-probabilities are taken in `u`
//! space: the tanh Jacobian does not depend on the parameters, so it drops out
//! of every gradient.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};

pub const ACTION_SCALE: f64 = 3.0;
pub const INITIAL_LOG_STD: f64 = -std::f64::consts::LN_2;
const LOG_STD_MIN: f64 = -5.0;
const LOG_STD_MAX: f64 = 1.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub log_std: f64,
    pub action_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub action: f64,
    /// Pre-squash value, needed to recompute log-probabilities.
    pub u: f64,
}

impl GaussianPolicy {
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            net: Mlp::new(sizes, &mut rng, true),
            log_std: INITIAL_LOG_STD,
            action_scale: ACTION_SCALE,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.net.sizes()[0]
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.net.forward(x)[0]
    }

    pub fn squash(&self, u: f64) -> f64 {
        self.action_scale * u.tanh()
    }

    pub fn act<R: Rng>(&self, x: &[f64], deterministic: bool, rng: &mut R) -> Result<Sample> {
        if x.len() != self.input_dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("bad observation {x:?}")));
        }
        let mu = self.mean(x);
        let u = if deterministic {
            mu
        } else {
            let z: f64 = rng.sample(StandardNormal);
            mu + self.log_std.exp() * z
        };
        Ok(Sample {
            action: self.squash(u),
            u,
        })
    }

    pub fn log_prob(&self, x: &[f64], u: f64) -> f64 {
        let mu = self.mean(x);
        let z = (u - mu) / self.log_std.exp();
        -0.5 * z * z - self.log_std - HALF_LN_2PI
    }

    pub fn n_params(&self) -> usize {
        self.net.n_params() + 1
    }

    /// Network parameters followed by the log-std.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.net.params().to_vec();
        p.push(self.log_std);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let n = self.net.n_params();
        self.net.params_mut().copy_from_slice(&p[..n]);
        self.log_std = p[n];
    }

    pub fn clamp_log_std(&mut self) {
        self.log_std = self.log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
    }

    /// Adds `weight * grad log pi(u | x)` into `grad`; returns the log-prob.
    pub fn accumulate_grad_log_prob(
        &self,
        x: &[f64],
        u: f64,
        weight: f64,
        grad: &mut [f64],
    ) -> f64 {
        let cache = self.net.forward_cached(x);
        let mu = cache.output()[0];
        let var = (2.0 * self.log_std).exp();
        let diff = u - mu;
        let n = self.net.n_params();
        self.net
            .backward(&cache, &[weight * diff / var], &mut grad[..n]);
        grad[n] += weight * (diff * diff / var - 1.0);
        -0.5 * diff * diff / var - self.log_std - HALF_LN_2PI
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(
            std::io::BufWriter::new(file),
            &Checkpoint::from_policy(self),
        )?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ck: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        ck.into_policy()
    }
}

pub const CHECKPOINT_FORMAT: &str = "corridor-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk policy: a header describing the shapes, then the flat weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: String,
    pub action_scale: f64,
    pub log_std: f64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_policy(p: &GaussianPolicy) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            layer_sizes: p.net.sizes().to_vec(),
            hidden_activation: "tanh".into(),
            action_scale: p.action_scale,
            log_std: p.log_std,
            params: p.net.params().to_vec(),
        }
    }

    pub fn into_policy(self) -> Result<GaussianPolicy> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.hidden_activation != "tanh" {
            return Err(Error::Config(format!(
                "unknown activation {}",
                self.hidden_activation
            )));
        }
        let net = Mlp::from_params(&self.layer_sizes, self.params)
            .ok_or_else(|| Error::Config("checkpoint weights do not match layer sizes".into()))?;
        if net.sizes().last() != Some(&1) {
            return Err(Error::Config("policy output must be one value".into()));
        }
        Ok(GaussianPolicy {
            net,
            log_std: self.log_std,
            action_scale: self.action_scale,
        })
    }
}
