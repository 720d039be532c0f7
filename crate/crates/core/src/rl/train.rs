//! Rollout collection, evaluation, and the training loop.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::algo::{discounted_return, ppo_update, vpg_update, Adam, PpoConfig, Trajectory};
use super::env::{CorridorEnv, EndCondition, EnvConfig};
use super::policy::GaussianPolicy;
use super::OBS_DIM;
use crate::error::{Error, Result};
use crate::scenario::{sweep_grid, ScenarioSpec, CAV_ID, EMS_ID};
use crate::sim::NetworkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppo,
    Vpg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub network: NetworkKind,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub learning_rate: f64,
    pub horizon: u32,
    pub episodes: usize,
    pub episodes_per_iteration: usize,
    pub workers: usize,
    pub clip_ratio: f64,
    /// Fit a linear value baseline for the clipped-surrogate update.
    pub baseline: bool,
    pub ppo_epochs: usize,
    pub minibatch: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Evaluate the deterministic policy every this many iterations.
    pub eval_every: usize,
    pub eval_x_a: Vec<f64>,
    pub eval_d: Vec<f64>,
    pub env: EnvConfig,
}

pub const EVAL_AXIS: [f64; 5] = [1.0, 8.5, 16.0, 23.5, 31.0];

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_network(NetworkKind::OneIntersection)
    }
}

impl TrainConfig {
    pub fn for_network(network: NetworkKind) -> Self {
        let eval_x_a = match network {
            NetworkKind::OneIntersection => EVAL_AXIS.to_vec(),
            NetworkKind::TwoIntersection => vec![-191.0, -176.0, 1.0, 16.0, 31.0],
        };
        Self {
            network,
            algorithm: Algorithm::Ppo,
            gamma: 0.999,
            learning_rate: 0.001,
            horizon: 600,
            episodes: 2000,
            episodes_per_iteration: 20,
            workers: 1,
            clip_ratio: 0.2,
            baseline: true,
            ppo_epochs: 8,
            minibatch: 256,
            hidden: vec![32, 32, 32],
            seed: 0,
            eval_every: 10,
            eval_x_a,
            eval_d: EVAL_AXIS.to_vec(),
            env: EnvConfig::for_network(network),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma = {} must be in (0, 1]",
                self.gamma
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.episodes_per_iteration == 0 || self.workers == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "episodes_per_iteration, workers and eval_every must be positive".into(),
            ));
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err(Error::Config("clip_ratio must be in (0, 1)".into()));
        }
        self.env.coeffs.validate()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![OBS_DIM];
        s.extend(&self.hidden);
        s.push(1);
        s
    }

    pub fn eval_cells(&self) -> Vec<ScenarioSpec> {
        let mut base = ScenarioSpec::new(self.network, 0.0, 0.0);
        base.horizon_steps = self.horizon;
        sweep_grid(&base, &self.eval_x_a, &self.eval_d)
    }

    /// A training scenario with `x_a` and `d` drawn uniformly from the studied ranges.
    pub fn sample_scenario<R: Rng>(&self, rng: &mut R) -> ScenarioSpec {
        let d = rng.gen_range(1.0..=53.5);
        let x_a = match self.network {
            NetworkKind::OneIntersection => rng.gen_range(1.0..=53.5),
            NetworkKind::TwoIntersection => {
                if rng.gen_bool(3.0 / 8.0) {
                    rng.gen_range(-191.0..=-176.0)
                } else {
                    rng.gen_range(1.0..=31.0)
                }
            }
        };
        let mut spec = ScenarioSpec::new(self.network, x_a, d);
        spec.horizon_steps = self.horizon;
        spec.seed = rng.gen();
        spec
    }
}

/// Seed for episode `index` of `iteration`, independent of worker layout.
pub fn episode_seed(seed: u64, iteration: u64, index: u64) -> u64 {
    let mut z = seed
        ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub enum Actor<'a> {
    Stochastic(&'a GaussianPolicy),
    Deterministic(&'a GaussianPolicy),
    /// Uniform random accelerations over the action bounds.
    Random,
    /// Leave the CAV to the driver model.
    Driver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub trajectory: Trajectory,
    pub ret: f64,
    pub t_ev: Option<f64>,
    pub t_cav: Option<f64>,
}

pub fn rollout(
    actor: Actor<'_>,
    spec: &ScenarioSpec,
    env_cfg: &EnvConfig,
    gamma: f64,
    rng_seed: u64,
) -> Result<Rollout> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut env = CorridorEnv::new(spec, env_cfg.clone(), false)?;
    let mut tr = Trajectory::default();
    while !env.is_done() {
        let input = env.input();
        let (action, u) = match (actor, input) {
            (_, None) | (Actor::Driver, _) => (None, None),
            (Actor::Random, Some(_)) => (Some(rng.gen_range(-3.0..=3.0)), None),
            (Actor::Stochastic(p), Some(x)) => {
                let s = p.act(&x, false, &mut rng)?;
                (Some(s.action), Some(s.u))
            }
            (Actor::Deterministic(p), Some(x)) => {
                let s = p.act(&x, true, &mut rng)?;
                (Some(s.action), Some(s.u))
            }
        };
        let step = env.step(action)?;
        if let Some(x) = input {
            tr.push(x.to_vec(), u.unwrap_or(0.0), step.reward);
        }
    }
    Ok(Rollout {
        ret: discounted_return(&tr.rewards, gamma),
        t_ev: env.travel_time(EMS_ID),
        t_cav: env.travel_time(CAV_ID),
        trajectory: tr,
    })
}

/// Runs `jobs` on up to `workers` threads; results keep job order.
pub fn run_parallel<T, F>(jobs: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, jobs.max(1));
    if workers == 1 {
        return (0..jobs).map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..jobs).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    (w..jobs)
                        .step_by(workers)
                        .map(|i| (i, f(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("rollout worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every job ran"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub x_a: f64,
    pub d: f64,
    pub ret: f64,
    pub t_ev: Option<f64>,
    pub t_cav: Option<f64>,
}

/// One episode per cell (per repeat for stochastic actors), run until the
/// CAV has left and the EMS has cleared.
pub fn evaluate(
    actor: Actor<'_>,
    cells: &[ScenarioSpec],
    env_cfg: &EnvConfig,
    gamma: f64,
    repeats: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<EvalEpisode>> {
    let mut cfg = env_cfg.clone();
    cfg.end = EndCondition::CavExitAndEmsCleared;
    let jobs = cells.len() * repeats;
    run_parallel(jobs, workers, |j| {
        let spec = &cells[j % cells.len()];
        let r = rollout(
            actor,
            spec,
            &cfg,
            gamma,
            episode_seed(seed, u64::MAX, j as u64),
        )?;
        Ok(EvalEpisode {
            x_a: spec.x_a,
            d: spec.d,
            ret: r.ret,
            t_ev: r.t_ev,
            t_cav: r.t_cav,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_return: f64,
    pub ems_travel_time: Option<f64>,
    pub cav_travel_time: Option<f64>,
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "mean_return",
        "ems_travel_time",
        "cav_travel_time",
    ])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for p in curve {
        w.write_record([
            p.iteration.to_string(),
            p.mean_return.to_string(),
            opt(p.ems_travel_time),
            opt(p.cav_travel_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best checkpoint by deterministic evaluation return.
    pub best: GaussianPolicy,
    pub best_eval_return: Option<f64>,
    pub last: GaussianPolicy,
    pub curve: Vec<CurvePoint>,
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Trains from a fresh policy. With `checkpoint` set, the best policy so far is
/// written there whenever it improves, so a diverged run leaves it behind.
pub fn train(cfg: &TrainConfig, checkpoint: Option<&Path>) -> Result<TrainOutcome> {
    train_from(
        GaussianPolicy::new(&cfg.layer_sizes(), cfg.seed),
        cfg,
        checkpoint,
    )
}

pub fn train_from(
    mut policy: GaussianPolicy,
    cfg: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut curve = Vec::new();
    let mut best = policy.clone();
    let mut best_eval_return = None;
    if cfg.episodes == 0 {
        return Ok(TrainOutcome {
            best,
            best_eval_return,
            last: policy,
            curve,
        });
    }
    let cells = cfg.eval_cells();
    let iterations = cfg.episodes.div_ceil(cfg.episodes_per_iteration);
    let mut adam = Adam::new(policy.n_params(), cfg.learning_rate);
    let ppo = PpoConfig {
        clip_ratio: cfg.clip_ratio,
        epochs: cfg.ppo_epochs,
        minibatch: cfg.minibatch,
        gamma: cfg.gamma,
        baseline: cfg.baseline,
    };
    let mut done_episodes = 0;
    for it in 0..iterations {
        let n = cfg.episodes_per_iteration.min(cfg.episodes - done_episodes);
        done_episodes += n;
        let snapshot = policy.clone();
        let rollouts: Vec<Rollout> = run_parallel(n, cfg.workers, |i| {
            let seed = episode_seed(cfg.seed, it as u64, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = cfg.sample_scenario(&mut rng);
            rollout(
                Actor::Stochastic(&snapshot),
                &spec,
                &cfg.env,
                cfg.gamma,
                rng.gen(),
            )
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let point = CurvePoint {
            iteration: it,
            mean_return: mean_of(rollouts.iter().map(|r| r.ret)).unwrap_or(0.0),
            ems_travel_time: mean_of(rollouts.iter().filter_map(|r| r.t_ev)),
            cav_travel_time: mean_of(rollouts.iter().filter_map(|r| r.t_cav)),
        };
        if !point.mean_return.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                detail: format!("mean return {}", point.mean_return),
            });
        }
        log::info!(
            "iteration {it}: mean return {:.2}, T_ev {:?}, T_cav {:?}",
            point.mean_return,
            point.ems_travel_time,
            point.cav_travel_time
        );
        curve.push(point);

        let batch: Vec<Trajectory> = rollouts.into_iter().map(|r| r.trajectory).collect();
        match cfg.algorithm {
            Algorithm::Vpg => {
                vpg_update(&mut policy, &batch, cfg.learning_rate, cfg.gamma, it)?;
            }
            Algorithm::Ppo => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(episode_seed(cfg.seed, it as u64, u64::MAX));
                ppo_update(&mut policy, &batch, &ppo, &mut adam, &mut rng, it)?;
            }
        }
        if policy.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                iteration: it,
                detail: "non-finite parameters after update".into(),
            });
        }

        if (it + 1) % cfg.eval_every == 0 || it + 1 == iterations {
            let eval = evaluate(
                Actor::Deterministic(&policy),
                &cells,
                &cfg.env,
                cfg.gamma,
                1,
                cfg.seed,
                cfg.workers,
            )?;
            let score = mean_of(eval.iter().map(|e| e.ret)).unwrap_or(f64::NEG_INFINITY);
            log::info!("iteration {it}: evaluation return {score:.2}");
            if best_eval_return.is_none_or(|b| score > b) {
                best_eval_return = Some(score);
                best = policy.clone();
                if let Some(path) = checkpoint {
                    best.save(path)?;
                }
            }
        }
    }
    Ok(TrainOutcome {
        best,
        best_eval_return,
        last: policy,
        curve,
    })
}
