//! Gap-acceptance rule for the emergency vehicle.

use serde::{Deserialize, Serialize};

use super::braking::braking_distance;
use super::idm::{AccelBounds, IdmParams, LeaderGap};
use super::vehicle::Vehicle;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeParams {
    /// Minimum gain in next-step speed (m/s) before switching lanes.
    pub speed_gain: f64,
    /// Minimum bumper gap to the new leader and from the new follower (m).
    pub safety_gap: f64,
}

impl Default for LaneChangeParams {
    fn default() -> Self {
        Self {
            speed_gain: 0.25,
            safety_gap: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneDecision {
    Stay,
    Change(usize),
}

/// Same-lane and adjacent-lane neighbors of the EMS.
#[derive(Debug, Clone, Copy)]
pub struct LaneNeighbors<'a> {
    pub current_leader: Option<&'a Vehicle>,
    pub target_lane: usize,
    pub target_leader: Option<&'a Vehicle>,
    pub target_follower: Option<&'a Vehicle>,
}

#[derive(Debug, Clone, Copy)]
pub struct LaneChangeContext {
    pub idm: IdmParams,
    pub bounds: AccelBounds,
    pub params: LaneChangeParams,
    pub dt: f64,
    pub desired_speed: f64,
    pub speed_limit: f64,
    /// Acceleration imposed by a red or yellow stop line ahead, which binds
    /// equally in both lanes.
    pub stop_line_accel: Option<f64>,
}

impl LaneChangeContext {
    fn projected_speed(&self, ems: &Vehicle, leader: Option<&Vehicle>) -> Result<f64, SimError> {
        let gap = leader.map(|l| LeaderGap {
            gap: ems.gap_to(l).max(1e-6),
            closing_speed: ems.speed - l.speed,
        });
        let mut a = self.idm.raw_accel(ems.speed, self.desired_speed, gap)?;
        if let Some(stop) = self.stop_line_accel {
            a = a.min(stop);
        }
        let a = self.bounds.clamp(a);
        Ok((ems.speed + a * self.dt).clamp(0.0, self.speed_limit))
    }

    fn gap_is_safe(&self, follower: &Vehicle, leader: &Vehicle) -> bool {
        let decel = -self.bounds.min;
        let gap = follower.gap_to(leader);
        let margin = self.params.safety_gap;
        gap >= margin
            && gap + braking_distance(leader.speed, decel, self.dt)
                - braking_distance(follower.speed, decel, self.dt)
                >= margin
    }
}

/// Switch lanes iff the adjacent lane promises a strictly higher next-step
/// speed (by at least `speed_gain`) and both new gaps are safe.
pub fn ems_lane_change(
    ems: &Vehicle,
    neighbors: &LaneNeighbors<'_>,
    ctx: &LaneChangeContext,
) -> Result<LaneDecision, SimError> {
    let current = ctx.projected_speed(ems, neighbors.current_leader)?;
    let target = ctx.projected_speed(ems, neighbors.target_leader)?;
    if target <= current + ctx.params.speed_gain {
        return Ok(LaneDecision::Stay);
    }
    let leader_ok = neighbors
        .target_leader
        .is_none_or(|l| ctx.gap_is_safe(ems, l));
    let follower_ok = neighbors
        .target_follower
        .is_none_or(|f| ctx.gap_is_safe(f, ems));
    Ok(if leader_ok && follower_ok {
        LaneDecision::Change(neighbors.target_lane)
    } else {
        LaneDecision::Stay
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::vehicle::{VehicleClass, VehicleId};

    fn ctx() -> LaneChangeContext {
        LaneChangeContext {
            idm: IdmParams::default(),
            bounds: AccelBounds::default(),
            params: LaneChangeParams::default(),
            dt: 0.5,
            desired_speed: 35.0,
            speed_limit: 35.0,
            stop_line_accel: None,
        }
    }

    fn car(id: u32, class: VehicleClass, lane: usize, x: f64, v: f64) -> Vehicle {
        let mut c = Vehicle::new(VehicleId(id), class, lane, x);
        c.speed = v;
        c
    }

    #[test]
    fn empty_adjacent_lane_beats_blocked_lane() {
        let ems = car(1, VehicleClass::Ems, 1, 100.0, 0.0);
        let blocker = car(2, VehicleClass::Human, 1, 107.0, 0.0);
        let n = LaneNeighbors {
            current_leader: Some(&blocker),
            target_lane: 0,
            target_leader: None,
            target_follower: None,
        };
        assert_eq!(
            ems_lane_change(&ems, &n, &ctx()).unwrap(),
            LaneDecision::Change(0)
        );
    }

    #[test]
    fn short_adjacent_gap_rejected() {
        let ems = car(1, VehicleClass::Ems, 1, 100.0, 0.0);
        let blocker = car(2, VehicleClass::Human, 1, 107.0, 0.0);
        // Follower in the target lane is 1 m behind the EMS rear.
        let tailgater = car(3, VehicleClass::Human, 0, 94.0, 0.0);
        let n = LaneNeighbors {
            current_leader: Some(&blocker),
            target_lane: 0,
            target_leader: None,
            target_follower: Some(&tailgater),
        };
        assert_eq!(
            ems_lane_change(&ems, &n, &ctx()).unwrap(),
            LaneDecision::Stay
        );
    }

    #[test]
    fn fast_follower_needs_braking_room() {
        let ems = car(1, VehicleClass::Ems, 1, 100.0, 0.0);
        let blocker = car(2, VehicleClass::Human, 1, 107.0, 0.0);
        // 10 m gap is plenty at rest but not for a follower doing 15 m/s.
        let follower = car(3, VehicleClass::Human, 0, 85.0, 15.0);
        let n = LaneNeighbors {
            current_leader: Some(&blocker),
            target_lane: 0,
            target_leader: None,
            target_follower: Some(&follower),
        };
        assert_eq!(
            ems_lane_change(&ems, &n, &ctx()).unwrap(),
            LaneDecision::Stay
        );
    }

    #[test]
    fn no_gain_no_change() {
        let ems = car(1, VehicleClass::Ems, 1, 100.0, 0.0);
        let n = LaneNeighbors {
            current_leader: None,
            target_lane: 0,
            target_leader: None,
            target_follower: None,
        };
        assert_eq!(
            ems_lane_change(&ems, &n, &ctx()).unwrap(),
            LaneDecision::Stay
        );
    }
}
