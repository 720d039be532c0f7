//! Vanilla policy gradient and the clipped-surrogate update.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::GaussianPolicy;
use crate::error::{Error, Result};

/// One rollout: network inputs, pre-squash samples, and rewards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub inputs: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, u: f64, reward: f64) {
        self.inputs.push(input);
        self.u.push(u);
        self.rewards.push(reward);
    }
}

/// `G_t = r_t + gamma * G_{t+1}`.
pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for t in (0..rewards.len()).rev() {
        g = rewards[t] + gamma * g;
        out[t] = g;
    }
    out
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    returns_to_go(rewards, gamma)
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// Batch mean of `sum_t log pi(u_t | s_t) G_t`, whose gradient is the
/// policy-gradient estimate.
pub fn vpg_objective(policy: &GaussianPolicy, batch: &[Trajectory], gamma: f64) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .map(|tr| {
            returns_to_go(&tr.rewards, gamma)
                .iter()
                .zip(tr.inputs.iter().zip(&tr.u))
                .map(|(g, (x, &u))| policy.log_prob(x, u) * g)
                .sum::<f64>()
        })
        .sum();
    total / batch.len() as f64
}

pub fn vpg_gradient(policy: &GaussianPolicy, batch: &[Trajectory], gamma: f64) -> Vec<f64> {
    let mut grad = vec![0.0; policy.n_params()];
    if batch.is_empty() {
        return grad;
    }
    let scale = 1.0 / batch.len() as f64;
    for tr in batch {
        for (g, (x, &u)) in returns_to_go(&tr.rewards, gamma)
            .iter()
            .zip(tr.inputs.iter().zip(&tr.u))
        {
            if *g != 0.0 {
                policy.accumulate_grad_log_prob(x, u, g * scale, &mut grad);
            }
        }
    }
    grad
}

fn check_finite(grad: &[f64], what: &str, iteration: usize) -> Result<()> {
    match grad.iter().position(|g| !g.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Divergence {
            iteration,
            detail: format!(
                "{what}: component {i} of {} is {}; |grad|_max over finite entries {:.3e}",
                grad.len(),
                grad[i],
                grad.iter()
                    .filter(|g| g.is_finite())
                    .fold(0.0f64, |m, g| m.max(g.abs()))
            ),
        }),
    }
}

/// Plain gradient ascent step `theta += lr * grad`.
pub fn vpg_update(
    policy: &mut GaussianPolicy,
    batch: &[Trajectory],
    lr: f64,
    gamma: f64,
    iteration: usize,
) -> Result<Vec<f64>> {
    let grad = vpg_gradient(policy, batch, gamma);
    check_finite(&grad, "policy gradient", iteration)?;
    let mut p = policy.params();
    for (pi, gi) in p.iter_mut().zip(&grad) {
        *pi += lr * gi;
    }
    policy.set_params(&p);
    policy.clamp_log_std();
    Ok(grad)
}

/// Adam, used here for ascent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] += self.lr * (self.m[i] / b1t) / ((self.v[i] / b2t).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip_ratio: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub gamma: f64,
    /// Subtract a fitted [`LinearBaseline`] from the return-to-go.
    pub baseline: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_ratio: 0.2,
            epochs: 8,
            minibatch: 256,
            gamma: 0.999,
            baseline: true,
        }
    }
}

/// Ridge-regressed state value on `[x, x^2, t, t^2, t^3, 1]`.
///
/// Return-to-go here is mostly remaining distance, which the CAV position
/// already encodes, so even a linear fit removes most of the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBaseline {
    weights: Vec<f64>,
}

impl LinearBaseline {
    const TIME_SCALE: f64 = 100.0;

    pub fn features(x: &[f64], t: usize) -> Vec<f64> {
        let tt = t as f64 / Self::TIME_SCALE;
        let mut f = Vec::with_capacity(2 * x.len() + 4);
        f.extend(x.iter().map(|v| v.clamp(-10.0, 10.0)));
        f.extend(x.iter().map(|v| v.clamp(-10.0, 10.0).powi(2)));
        f.extend([tt, tt * tt, tt * tt * tt, 1.0]);
        f
    }

    /// Fits to `(features, target)` pairs. Regularization grows until the
    /// normal equations factor.
    pub fn fit(rows: &[Vec<f64>], targets: &[f64]) -> Option<Self> {
        let k = rows.first()?.len();
        let phi = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        let y = DVector::from_column_slice(targets);
        let gram = phi.transpose() * &phi;
        let rhs = phi.transpose() * y;
        let mut reg = 1e-5;
        for _ in 0..6 {
            let a = &gram + DMatrix::identity(k, k) * reg;
            if let Some(ch) = a.cholesky() {
                let w = ch.solve(&rhs);
                if w.iter().all(|v| v.is_finite()) {
                    return Some(Self {
                        weights: w.iter().copied().collect(),
                    });
                }
            }
            reg *= 10.0;
        }
        None
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, f)| w * f).sum()
    }
}

/// Normalized advantages for every step of `batch`, flattened in order.
pub fn advantages(batch: &[Trajectory], gamma: f64, baseline: bool) -> Vec<f64> {
    let mut feats = Vec::new();
    let mut g = Vec::new();
    for tr in batch {
        for (t, (x, ret)) in tr
            .inputs
            .iter()
            .zip(returns_to_go(&tr.rewards, gamma))
            .enumerate()
        {
            if baseline {
                feats.push(LinearBaseline::features(x, t));
            }
            g.push(ret);
        }
    }
    if baseline {
        if let Some(b) = LinearBaseline::fit(&feats, &g) {
            for (gi, f) in g.iter_mut().zip(&feats) {
                *gi -= b.predict(f);
            }
        }
    }
    let n = g.len().max(1) as f64;
    let mean = g.iter().sum::<f64>() / n;
    let std = (g.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-8);
    g.iter().map(|a| (a - mean) / std).collect()
}

/// `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_surrogate(ratio: f64, adv: f64, clip: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - clip, 1.0 + clip) * adv)
}

/// Derivative of the clipped surrogate with respect to the ratio; zero where
/// the clipped branch is active.
pub fn clipped_surrogate_grad(ratio: f64, adv: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    if ratio * adv <= clipped * adv || ratio == clipped {
        adv
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    /// Surrogate value on the first minibatch pass, before any step.
    pub first_surrogate: f64,
    pub clip_fraction: f64,
    pub samples: usize,
}

/// Several epochs of minibatch ascent on the clipped surrogate. Advantages
/// come from [`advantages`].
pub fn ppo_update<R: Rng>(
    policy: &mut GaussianPolicy,
    batch: &[Trajectory],
    cfg: &PpoConfig,
    adam: &mut Adam,
    rng: &mut R,
    iteration: usize,
) -> Result<PpoStats> {
    let samples: Vec<(&[f64], f64)> = batch
        .iter()
        .flat_map(|tr| {
            tr.inputs
                .iter()
                .map(Vec::as_slice)
                .zip(tr.u.iter().copied())
        })
        .collect();
    let n = samples.len();
    if n == 0 {
        return Ok(PpoStats {
            first_surrogate: 0.0,
            clip_fraction: 0.0,
            samples: 0,
        });
    }
    let adv = advantages(batch, cfg.gamma, cfg.baseline);
    check_finite(&adv, "advantages", iteration)?;
    let old_logp: Vec<f64> = samples
        .iter()
        .map(|&(x, u)| policy.log_prob(x, u))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mb = cfg.minibatch.max(1);
    let mut first_surrogate = None;
    let mut clipped = 0usize;
    let mut seen = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let mut grad = vec![0.0; policy.n_params()];
            let mut surrogate = 0.0;
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (x, u) = samples[i];
                let ratio = (policy.log_prob(x, u) - old_logp[i]).exp();
                surrogate += clipped_surrogate(ratio, adv[i], cfg.clip_ratio) * scale;
                let d = clipped_surrogate_grad(ratio, adv[i], cfg.clip_ratio);
                if d == 0.0 {
                    clipped += 1;
                } else {
                    // d ratio / d theta = ratio * d log pi / d theta
                    policy.accumulate_grad_log_prob(x, u, d * ratio * scale, &mut grad);
                }
                seen += 1;
            }
            first_surrogate.get_or_insert(surrogate);
            check_finite(&grad, "clipped surrogate gradient", iteration)?;
            let mut p = policy.params();
            adam.ascend(&mut p, &grad);
            policy.set_params(&p);
            policy.clamp_log_std();
        }
    }
    Ok(PpoStats {
        first_surrogate: first_surrogate.unwrap_or(0.0),
        clip_fraction: clipped as f64 / seen.max(1) as f64,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_follow_recursion() {
        let r = [1.0, -2.0, 0.5, 3.0];
        let g = returns_to_go(&r, 0.9);
        for t in 0..3 {
            assert_eq!(g[t], r[t] + 0.9 * g[t + 1]);
        }
        assert_eq!(g[3], 3.0);
    }

    #[test]
    fn zero_reward_gives_zero_update() {
        let mut p = GaussianPolicy::new(&[2, 3, 1], 4);
        let before = p.params();
        let tr = Trajectory {
            inputs: vec![vec![0.3, 0.1]],
            u: vec![0.7],
            rewards: vec![0.0],
        };
        vpg_update(&mut p, &[tr], 0.1, 0.99, 0).unwrap();
        assert_eq!(p.params(), before);
    }

    #[test]
    fn fresh_batch_surrogate_is_unclipped() {
        for adv in [-1.5, 0.0, 2.0] {
            assert_eq!(clipped_surrogate(1.0, adv, 0.2), adv);
        }
        // Saturated ratio: no gradient through the ratio.
        assert_eq!(clipped_surrogate_grad(1.4, 1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(0.6, -1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(1.4, -1.0, 0.2), -1.0);
    }

    #[test]
    fn nan_reward_is_divergence() {
        let mut p = GaussianPolicy::new(&[2, 3, 1], 4);
        let tr = Trajectory {
            inputs: vec![vec![0.3, 0.1]],
            u: vec![0.7],
            rewards: vec![f64::NAN],
        };
        assert!(matches!(
            vpg_update(&mut p, &[tr], 0.1, 0.99, 7),
            Err(Error::Divergence { iteration: 7, .. })
        ));
    }
}
