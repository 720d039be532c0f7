//! CAV control strategies.

pub mod model_based;
pub mod policy;
pub mod shockwave;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::Simulation;

pub use model_based::{ModelBased, Phase};
pub use policy::PolicyController;
pub use shockwave::{
    analytic_times, cav_time_single, cruise_speed, optimal_split, oracle_times,
    proceeds_without_waiting, queue_release_time, satisfies_timing, AnalyticTimes, OracleTimes,
    ShockwaveParams, DEFAULT_W,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    ModelBased,
    Oracle,
    Policy,
    IdmBaseline,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::ModelBased => "model_based",
            ControllerKind::Oracle => "oracle",
            ControllerKind::Policy => "policy",
            ControllerKind::IdmBaseline => "idm_baseline",
        }
    }
}

/// Something that picks the CAV's acceleration each step.
pub trait CavController {
    /// `None` hands the CAV to the built-in driver model for this step.
    fn command(&mut self, sim: &Simulation) -> Result<Option<f64>>;

    fn name(&self) -> &'static str;
}

/// Leaves the CAV to the driver model, as if it were a human vehicle.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdmBaseline;

impl CavController for IdmBaseline {
    fn command(&mut self, _sim: &Simulation) -> Result<Option<f64>> {
        Ok(None)
    }

    fn name(&self) -> &'static str {
        "idm_baseline"
    }
}
