//! Shockwave-based CAV controller run inside the simulator.

use serde::{Deserialize, Serialize};

use super::shockwave::{
    analytic_times, cruise_speed, proceeds_without_waiting, AnalyticTimes, ShockwaveParams,
};
use super::CavController;
use crate::error::Result;
use crate::scenario::{CAV_ID, EMS_ID};
use crate::sim::{braking::max_speed_for_braking_distance, Simulation, VehicleClass};

/// An EMS this far ahead of the CAV in the other lane no longer needs help.
pub const RELEASE_LEAD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Phase {
    /// Stand still so the EMS can cut in ahead.
    Hold,
    /// Creep toward the split point without beating the EMS to it.
    Cruise { speed: f64 },
    /// The second-approach exception: drive normally from the start.
    Proceed,
    /// The EMS has gone by; drive normally.
    Released,
}

#[derive(Debug, Clone)]
pub struct ModelBased {
    params: ShockwaveParams,
    times: AnalyticTimes,
    phase: Phase,
    /// Stop-line coordinate the split point is measured from.
    reference_line: f64,
}

impl ModelBased {
    /// Reads `x_a` and `d` off the simulator at `t0`.
    pub fn new(sim: &Simulation, w: f64) -> Result<Self> {
        let net = sim.network();
        let limits = net.speed_limits();
        let line1 = net.stop_line(0);
        let cav = sim.vehicle(CAV_ID);
        let ems = sim.vehicle(EMS_ID);
        let (x_a, d) = match (cav, ems) {
            (Some(c), Some(e)) => (line1 - c.position, (line1 - e.position).max(0.0)),
            _ => (0.0, 0.0),
        };
        let mut params = ShockwaveParams::new(
            w,
            limits.for_class(VehicleClass::Cav),
            limits.for_class(VehicleClass::Ems),
            d,
            x_a,
        );
        if let Some(z) = net.z() {
            params = params.with_z(z);
        }
        let times = analytic_times(&params)?;
        let ems_upstream = ems.is_some_and(|e| e.position <= line1);
        let cav_on_road = cav.is_some_and(|c| c.position <= net.final_stop_line());
        let phase = if !(ems_upstream && cav_on_road) {
            Phase::Released
        } else if x_a < 0.0 {
            // Queued at stop line 2; the exception is checked once, at t0.
            let z = params.z.unwrap_or(0.0);
            if proceeds_without_waiting(z, -x_a, d, w, params.u, params.v) {
                Phase::Proceed
            } else {
                Phase::Hold
            }
        } else {
            match cruise_speed(&params, &times) {
                Some(speed) => Phase::Cruise { speed },
                None => Phase::Hold,
            }
        };
        Ok(Self {
            params,
            times,
            phase,
            reference_line: line1,
        })
    }

    pub fn params(&self) -> &ShockwaveParams {
        &self.params
    }

    pub fn times(&self) -> &AnalyticTimes {
        &self.times
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn ems_has_passed(&self, sim: &Simulation) -> bool {
        let (Some(cav), Some(ems)) = (sim.vehicle(CAV_ID), sim.vehicle(EMS_ID)) else {
            return true;
        };
        if ems.position > sim.network().final_stop_line() {
            return true;
        }
        let ahead = ems.position - cav.position;
        (ems.lane == cav.lane && ahead > 0.0) || ahead > RELEASE_LEAD
    }
}

impl CavController for ModelBased {
    fn command(&mut self, sim: &Simulation) -> Result<Option<f64>> {
        if matches!(self.phase, Phase::Hold | Phase::Cruise { .. }) && self.ems_has_passed(sim) {
            self.phase = Phase::Released;
        }
        let Some(cav) = sim.vehicle(CAV_ID) else {
            return Ok(None);
        };
        let dt = sim.config().dt;
        let bounds = sim.config().accel_bounds;
        let target = match self.phase {
            Phase::Proceed | Phase::Released => return Ok(None),
            Phase::Hold => 0.0,
            Phase::Cruise { speed } => {
                // Never roll past the split point before release.
                let to_split = (self.reference_line - self.times.x_l) - cav.position;
                let stop_cap = max_speed_for_braking_distance(to_split, -bounds.min, dt);
                if to_split <= 0.0 {
                    0.0
                } else {
                    speed.min(stop_cap)
                }
            }
        };
        let a = bounds.clamp((target - cav.speed) / dt);
        Ok(Some(a.min(sim.driver_accel(CAV_ID)?)))
    }

    fn name(&self) -> &'static str {
        "model_based"
    }
}
