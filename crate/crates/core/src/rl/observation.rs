//! What the CAV sees each step.

use serde::{Deserialize, Serialize};

use crate::scenario::{CAV_ID, EMS_ID};
use crate::sim::{Simulation, VehicleClass};

pub const OBS_DIM: usize = 9;
pub const DEFAULT_COMM_RANGE: f64 = 300.0;
/// Headway reported when there is no leader or follower.
pub const ABSENT_HEADWAY: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub v_lead: f64,
    pub h_lead: f64,
    pub v_follower: f64,
    pub h_follower: f64,
    pub v_ev: f64,
    /// Lane of the EMS, or -1 when out of range.
    pub l_ev: f64,
    pub p_ev: f64,
    pub v_cav: f64,
    pub p_cav: f64,
    pub l_cav: usize,
    pub ems_in_range: bool,
}

/// Scales for turning an observation into network input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsScale {
    pub length: f64,
    pub speed: f64,
}

impl Observation {
    pub fn to_input(&self, scale: &ObsScale) -> [f64; OBS_DIM] {
        [
            self.v_lead / scale.speed,
            self.h_lead / scale.length,
            self.v_follower / scale.speed,
            self.h_follower / scale.length,
            self.v_ev / scale.speed,
            self.l_ev,
            self.p_ev / scale.length,
            self.v_cav / scale.speed,
            self.p_cav / scale.length,
        ]
    }
}

impl ObsScale {
    pub fn for_simulation(sim: &Simulation) -> Self {
        Self {
            length: sim.network().length(),
            speed: sim.network().speed_limits().for_class(VehicleClass::Ems),
        }
    }
}

/// `None` once the CAV has left the corridor.
pub fn observe(sim: &Simulation, comm_range: f64) -> Option<Observation> {
    let cav = sim.vehicle(CAV_ID)?;
    let (leader, follower) = sim.neighbors(CAV_ID)?;
    let (v_lead, h_lead) = leader.map_or((0.0, ABSENT_HEADWAY), |l| (l.speed, cav.gap_to(l)));
    let (v_follower, h_follower) =
        follower.map_or((0.0, ABSENT_HEADWAY), |f| (f.speed, f.gap_to(cav)));
    let ems = sim
        .vehicle(EMS_ID)
        .filter(|e| (cav.position - e.position).abs() < comm_range);
    let (v_ev, l_ev, p_ev) = ems.map_or((0.0, -1.0, cav.position), |e| {
        (e.speed, e.lane as f64, e.position)
    });
    Some(Observation {
        v_lead,
        h_lead: h_lead.max(0.0),
        v_follower,
        h_follower: h_follower.max(0.0),
        v_ev,
        l_ev,
        p_ev,
        v_cav: cav.speed,
        p_cav: cav.position,
        l_cav: cav.lane,
        ems_in_range: ems.is_some(),
    })
}
