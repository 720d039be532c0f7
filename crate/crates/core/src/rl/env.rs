//! The simulator seen as a single-agent environment for the CAV.

use serde::{Deserialize, Serialize};

use super::observation::{observe, ObsScale, Observation, DEFAULT_COMM_RANGE, OBS_DIM};
use super::reward::{reward, RewardCoefficients, RewardInput, RewardVariant};
use crate::error::Result;
use crate::metrics::EpisodeRecord;
use crate::scenario::{build_initial_state_with, ScenarioOptions, ScenarioSpec, CAV_ID, EMS_ID};
use crate::sim::{CavCommand, NetworkKind, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    Horizon,
    /// Stop as soon as the CAV has left the corridor.
    CavExit,
    /// Stop once the CAV has left and the EMS has crossed its last stop line.
    CavExitAndEmsCleared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub comm_range: f64,
    pub coeffs: RewardCoefficients,
    pub variant: RewardVariant,
    pub end: EndCondition,
    pub options: ScenarioOptions,
}

impl EnvConfig {
    pub fn for_network(kind: NetworkKind) -> Self {
        Self {
            comm_range: DEFAULT_COMM_RANGE,
            coeffs: RewardCoefficients::for_network(kind),
            variant: RewardVariant::Equation,
            end: EndCondition::CavExit,
            options: ScenarioOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
}

pub struct CorridorEnv {
    cfg: EnvConfig,
    sim: Simulation,
    scale: ObsScale,
    horizon: u64,
    steps: u64,
    record: Option<EpisodeRecord>,
    ems_cleared: bool,
}

impl CorridorEnv {
    pub fn new(spec: &ScenarioSpec, cfg: EnvConfig, keep_record: bool) -> Result<Self> {
        cfg.coeffs.validate()?;
        let sim = build_initial_state_with(spec, &cfg.options)?.into_simulation()?;
        let horizon = u64::from(spec.horizon_steps);
        let record = keep_record.then(|| {
            let mut r = EpisodeRecord::for_simulation(&sim, horizon);
            r.capture(&sim);
            r
        });
        Ok(Self {
            scale: ObsScale::for_simulation(&sim),
            cfg,
            sim,
            horizon,
            steps: 0,
            record,
            ems_cleared: false,
        })
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn observation(&self) -> Option<Observation> {
        observe(&self.sim, self.cfg.comm_range)
    }

    pub fn input(&self) -> Option<[f64; OBS_DIM]> {
        self.observation().map(|o| o.to_input(&self.scale))
    }

    pub fn is_done(&self) -> bool {
        let cav_gone = self.sim.vehicle(CAV_ID).is_none();
        self.steps >= self.horizon
            || match self.cfg.end {
                EndCondition::Horizon => false,
                EndCondition::CavExit => cav_gone,
                EndCondition::CavExitAndEmsCleared => cav_gone && self.ems_cleared,
            }
    }

    /// `None` leaves the CAV to the driver model. The reward is taken on the
    /// state after the step and is zero once the CAV has left.
    pub fn step(&mut self, action: Option<f64>) -> Result<Transition> {
        let commands: Vec<CavCommand> = match action {
            Some(accel) if self.sim.vehicle(CAV_ID).is_some() => vec![CavCommand {
                vehicle: CAV_ID,
                accel,
            }],
            _ => Vec::new(),
        };
        self.sim.step(&commands)?;
        self.steps += 1;
        if let Some(r) = self.record.as_mut() {
            r.capture(&self.sim);
        }
        if !self.ems_cleared {
            let last = self.sim.network().intersections() - 1;
            self.ems_cleared = self.sim.vehicle(EMS_ID).is_none()
                || self.sim.events().iter().rev().any(|e| {
                    matches!(e, crate::sim::SimEvent::StopLineCrossing { vehicle, line, .. }
                        if *vehicle == EMS_ID && *line == last)
                });
        }
        let reward = match self.sim.vehicle(CAV_ID) {
            None => 0.0,
            Some(cav) => {
                let s = RewardInput {
                    v_cav: cav.speed,
                    p_cav: cav.position,
                    l_cav: cav.lane,
                    ems: self
                        .sim
                        .vehicle(EMS_ID)
                        .map(|e| (e.speed, e.position, e.lane)),
                };
                reward(&s, &self.cfg.coeffs, self.cfg.variant)
            }
        };
        Ok(Transition {
            reward,
            done: self.is_done(),
        })
    }

    pub fn into_record(mut self) -> Option<EpisodeRecord> {
        let events = self.sim.events().to_vec();
        if let Some(r) = self.record.as_mut() {
            r.set_events(&events);
        }
        self.record
    }

    /// Crossing time of the final stop line so far.
    pub fn travel_time(&self, id: crate::sim::VehicleId) -> Option<f64> {
        let last = self.sim.network().intersections() - 1;
        self.sim.events().iter().find_map(|e| match *e {
            crate::sim::SimEvent::StopLineCrossing {
                vehicle, line, t, ..
            } if vehicle == id && line == last => Some(t),
            _ => None,
        })
    }
}
