//! Learning environment, policy network, and policy-gradient training.

pub mod algo;
pub mod env;
pub mod mlp;
pub mod observation;
pub mod policy;
pub mod reward;
pub mod train;

pub use algo::{
    advantages, clipped_surrogate, clipped_surrogate_grad, discounted_return, ppo_update,
    returns_to_go, vpg_gradient, vpg_objective, vpg_update, Adam, LinearBaseline, PpoConfig,
    PpoStats, Trajectory,
};
pub use env::{CorridorEnv, EndCondition, EnvConfig, Transition};
pub use mlp::Mlp;
pub use observation::{
    observe, ObsScale, Observation, ABSENT_HEADWAY, DEFAULT_COMM_RANGE, OBS_DIM,
};
pub use policy::{Checkpoint, GaussianPolicy, Sample};
pub use reward::{reward, reward_case, RewardCase, RewardCoefficients, RewardInput, RewardVariant};
pub use train::{
    evaluate, rollout, run_parallel, train, train_from, write_curve_csv, Actor, Algorithm,
    CurvePoint, EvalEpisode, Rollout, TrainConfig, TrainOutcome,
};
