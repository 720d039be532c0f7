//! Learned policy driving the CAV in deterministic mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CavController;
use crate::error::Result;
use crate::rl::{observe, GaussianPolicy, ObsScale, DEFAULT_COMM_RANGE};
use crate::sim::Simulation;

#[derive(Debug, Clone)]
pub struct PolicyController {
    policy: GaussianPolicy,
    comm_range: f64,
    rng: ChaCha8Rng,
}

impl PolicyController {
    pub fn new(policy: GaussianPolicy) -> Self {
        Self {
            policy,
            comm_range: DEFAULT_COMM_RANGE,
            // Unused in deterministic mode; kept so `act` has a source.
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn with_comm_range(mut self, r: f64) -> Self {
        self.comm_range = r;
        self
    }
}

impl CavController for PolicyController {
    fn command(&mut self, sim: &Simulation) -> Result<Option<f64>> {
        let Some(obs) = observe(sim, self.comm_range) else {
            return Ok(None);
        };
        let x = obs.to_input(&ObsScale::for_simulation(sim));
        Ok(Some(self.policy.act(&x, true, &mut self.rng)?.action))
    }

    fn name(&self) -> &'static str {
        "policy"
    }
}
