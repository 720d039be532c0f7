use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::braking::{braking_distance, max_safe_speed, max_speed_for_braking_distance};
use super::idm::{AccelBounds, IdmParams, LeaderGap};
use super::lane_change::{
    ems_lane_change, LaneChangeContext, LaneChangeParams, LaneDecision, LaneNeighbors,
};
use super::network::CorridorNetwork;
use super::signal::{SignalProgram, SignalState};
use super::vehicle::{Vehicle, VehicleClass, VehicleId};
use super::SimError;

/// Slack for floating-point checks of the box constraints.
const BOUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub idm: IdmParams,
    pub accel_bounds: AccelBounds,
    pub lane_change: LaneChangeParams,
    /// Smallest bumper gap the safe-speed bound will allow (m).
    pub hard_min_gap: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            idm: IdmParams::default(),
            accel_bounds: AccelBounds::default(),
            lane_change: LaneChangeParams::default(),
            hard_min_gap: 1.0,
        }
    }
}

impl SimConfig {
    fn decel(&self) -> f64 {
        -self.accel_bounds.min
    }
}

/// `t = step_index * dt`, recomputed from the integer index so it never drifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub dt: f64,
    pub step_index: u64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        Self { dt, step_index: 0 }
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.dt
    }
}

/// A vehicle scheduled to enter the corridor at its upstream end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub t: f64,
    pub lane: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEvent {
    StopLineCrossing {
        vehicle: VehicleId,
        class: VehicleClass,
        lane: usize,
        line: usize,
        t: f64,
        step: u64,
    },
    LaneChange {
        vehicle: VehicleId,
        from: usize,
        to: usize,
        position: f64,
        t: f64,
        step: u64,
    },
    Inserted {
        vehicle: VehicleId,
        lane: usize,
        t: f64,
        step: u64,
    },
    Exit {
        vehicle: VehicleId,
        class: VehicleClass,
        t: f64,
        step: u64,
    },
}

/// External acceleration for a CAV. CAVs without a command drive with the
/// built-in car-following law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavCommand {
    pub vehicle: VehicleId,
    pub accel: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    network: CorridorNetwork,
    signals: SignalProgram,
    config: SimConfig,
    clock: SimClock,
    vehicles: Vec<Vehicle>,
    pending: Vec<VecDeque<f64>>,
    next_id: u32,
    events: Vec<SimEvent>,
}

impl Simulation {
    pub fn new(
        network: CorridorNetwork,
        signals: SignalProgram,
        config: SimConfig,
        mut vehicles: Vec<Vehicle>,
        arrivals: &[Arrival],
    ) -> Result<Self, SimError> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(SimError::InputDomain(format!(
                "dt = {} must be positive",
                config.dt
            )));
        }
        if signals.phase_offset_s.len() < network.intersections() {
            return Err(SimError::InvalidState(
                "signal program has fewer offsets than intersections".into(),
            ));
        }
        vehicles.sort_by_key(|v| v.id);
        let next_id = vehicles.last().map_or(0, |v| v.id.0 + 1);
        let mut pending = vec![VecDeque::new(); network.lanes()];
        let mut sorted: Vec<Arrival> = arrivals.to_vec();
        sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
        for a in sorted {
            let queue = pending.get_mut(a.lane).ok_or_else(|| {
                SimError::InvalidState(format!("arrival on missing lane {}", a.lane))
            })?;
            queue.push_back(a.t);
        }
        let sim = Self {
            network,
            signals,
            config,
            clock: SimClock::new(config.dt),
            vehicles,
            pending,
            next_id,
            events: Vec::new(),
        };
        sim.check_invariants()
            .map_err(|e| SimError::InvalidState(e.to_string()))?;
        Ok(sim)
    }

    pub fn network(&self) -> &CorridorNetwork {
        &self.network
    }

    pub fn signals(&self) -> &SignalProgram {
        &self.signals
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn t(&self) -> f64 {
        self.clock.t()
    }

    /// Vehicles currently in the corridor, ordered by id.
    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.index_of(id).map(|i| &self.vehicles[i])
    }

    pub fn first_of_class(&self, class: VehicleClass) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.class == class)
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn signal_states(&self) -> Vec<SignalState> {
        let t = self.t();
        (0..self.network.intersections())
            .map(|k| self.signals.state(t, k))
            .collect()
    }

    fn index_of(&self, id: VehicleId) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    /// Closest vehicle ahead of `position` in `lane`, excluding `except`.
    fn leader_in_lane(&self, lane: usize, position: f64, except: VehicleId) -> Option<&Vehicle> {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane && v.id != except && v.position >= position)
            .min_by(|a, b| a.position.total_cmp(&b.position).then(a.id.cmp(&b.id)))
    }

    fn follower_in_lane(&self, lane: usize, position: f64, except: VehicleId) -> Option<&Vehicle> {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane && v.id != except && v.position < position)
            .max_by(|a, b| a.position.total_cmp(&b.position).then(b.id.cmp(&a.id)))
    }

    /// Same-lane immediate leader and follower of vehicle `id`.
    pub fn neighbors(&self, id: VehicleId) -> Option<(Option<&Vehicle>, Option<&Vehicle>)> {
        let v = self.vehicle(id)?;
        Some((
            self.leader_in_lane(v.lane, v.position, id),
            self.follower_in_lane(v.lane, v.position, id),
        ))
    }

    /// Distance to a red or yellow stop line that `v` can still stop for.
    fn binding_stop_line(&self, v: &Vehicle, t: f64) -> Option<f64> {
        let (k, line) = self.network.next_stop_line(v.position)?;
        if !self.signals.state(t, k).is_stop() {
            return None;
        }
        let dist = line - v.position;
        let can_stop = braking_distance(v.speed, self.config.decel(), self.config.dt) <= dist;
        can_stop.then_some(dist)
    }

    fn stop_line_accel(&self, v: &Vehicle, desired: f64, t: f64) -> Result<Option<f64>, SimError> {
        match self.binding_stop_line(v, t) {
            None => Ok(None),
            Some(dist) => {
                let gap = LeaderGap {
                    gap: dist + self.config.idm.min_gap,
                    closing_speed: v.speed,
                };
                self.config
                    .idm
                    .raw_accel(v.speed, desired, Some(gap))
                    .map(Some)
            }
        }
    }

    fn desired_speed(&self, v: &Vehicle) -> f64 {
        self.network.speed_limits().for_class(v.class)
    }

    /// Acceleration the built-in driver would choose for vehicle `i`.
    fn driver_accel_at(&self, i: usize, t: f64) -> Result<f64, SimError> {
        let v = &self.vehicles[i];
        let desired = self.desired_speed(v);
        let leader = self
            .leader_in_lane(v.lane, v.position, v.id)
            .map(|l| LeaderGap {
                gap: v.gap_to(l),
                closing_speed: v.speed - l.speed,
            });
        let mut a = self.config.idm.raw_accel(v.speed, desired, leader)?;
        if let Some(stop) = self.stop_line_accel(v, desired, t)? {
            a = a.min(stop);
        }
        Ok(self.config.accel_bounds.clamp(a))
    }

    /// Car-following acceleration (IDM plus signal logic) for vehicle `id`,
    /// as the built-in driver would choose it at the current instant.
    pub fn driver_accel(&self, id: VehicleId) -> Result<f64, SimError> {
        let i = self.index_of(id).ok_or(SimError::UnknownVehicle(id))?;
        self.driver_accel_at(i, self.t())
    }

    fn apply_ems_lane_changes(&mut self, t: f64, step: u64) -> Result<(), SimError> {
        if self.network.lanes() < 2 {
            return Ok(());
        }
        let final_line = self.network.final_stop_line();
        let ems_ids: Vec<VehicleId> = self
            .vehicles
            .iter()
            .filter(|v| v.class == VehicleClass::Ems && v.position < final_line)
            .map(|v| v.id)
            .collect();
        for id in ems_ids {
            let i = self.index_of(id).expect("ems id is live");
            let ems = &self.vehicles[i];
            let target_lane = if ems.lane == 0 { 1 } else { ems.lane - 1 };
            let desired = self.desired_speed(ems);
            let ctx = LaneChangeContext {
                idm: self.config.idm,
                bounds: self.config.accel_bounds,
                params: self.config.lane_change,
                dt: self.config.dt,
                desired_speed: desired,
                speed_limit: desired,
                stop_line_accel: self.stop_line_accel(ems, desired, t)?,
            };
            let neighbors = LaneNeighbors {
                current_leader: self.leader_in_lane(ems.lane, ems.position, id),
                target_lane,
                target_leader: self.leader_in_lane(target_lane, ems.position, id),
                target_follower: self.follower_in_lane(target_lane, ems.position, id),
            };
            if let LaneDecision::Change(to) = ems_lane_change(ems, &neighbors, &ctx)? {
                let from = ems.lane;
                let position = ems.position;
                self.vehicles[i].lane = to;
                self.events.push(SimEvent::LaneChange {
                    vehicle: id,
                    from,
                    to,
                    position,
                    t,
                    step,
                });
            }
        }
        Ok(())
    }

    /// Advance one step. `commands` may only address CAVs.
    pub fn step(&mut self, commands: &[CavCommand]) -> Result<(), SimError> {
        let n = self.vehicles.len();
        let mut command: Vec<Option<f64>> = vec![None; n];
        for c in commands {
            let i = self
                .index_of(c.vehicle)
                .ok_or(SimError::UnknownVehicle(c.vehicle))?;
            if self.vehicles[i].class != VehicleClass::Cav {
                return Err(SimError::CommandForUncontrolled(c.vehicle));
            }
            if !c.accel.is_finite() {
                return Err(SimError::InputDomain(format!(
                    "non-finite command {} for vehicle {}",
                    c.accel, c.vehicle
                )));
            }
            command[i] = Some(c.accel);
        }

        let t = self.t();
        let step = self.clock.step_index;
        let dt = self.config.dt;
        let decel = self.config.decel();
        self.apply_ems_lane_changes(t, step)?;

        let mut new_speed = vec![0.0; n];
        let mut new_pos = vec![0.0; n];
        for lane in 0..self.network.lanes() {
            let mut order: Vec<usize> = (0..n).filter(|&i| self.vehicles[i].lane == lane).collect();
            order.sort_by(|&a, &b| {
                let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
                vb.position.total_cmp(&va.position).then(va.id.cmp(&vb.id))
            });
            let mut leader: Option<usize> = None;
            for &i in &order {
                let v = &self.vehicles[i];
                let limit = self.network.speed_limits().for_class(v.class);
                let wanted = match command[i] {
                    Some(a) => a,
                    None => self.driver_accel_at(i, t)?,
                };
                let a = self.config.accel_bounds.clamp(wanted);
                let mut v_next = (v.speed + a * dt).clamp(0.0, limit);

                let mut cap = limit;
                if let Some(l) = leader {
                    let lv = &self.vehicles[l];
                    let budget = (new_pos[l] - lv.length) - v.position
                        + braking_distance(new_speed[l], decel, dt)
                        - self.config.hard_min_gap;
                    cap = cap.min(max_safe_speed(budget, decel, dt));
                }
                if let Some(dist) = self.binding_stop_line(v, t) {
                    cap = cap.min(max_safe_speed(dist, decel, dt));
                }
                let floor = (v.speed - decel * dt).max(0.0);
                v_next = v_next.min(cap).max(floor);
                new_speed[i] = v_next;
                new_pos[i] = v.position + v_next * dt;
                leader = Some(i);
            }
        }

        let stop_lines: Vec<f64> = self.network.stop_lines().to_vec();
        for i in 0..n {
            let old_pos = self.vehicles[i].position;
            let old_speed = self.vehicles[i].speed;
            let veh = &mut self.vehicles[i];
            veh.accel = self
                .config
                .accel_bounds
                .clamp((new_speed[i] - old_speed) / dt);
            veh.speed = new_speed[i];
            veh.position = new_pos[i];
            for (k, &line) in stop_lines.iter().enumerate() {
                if old_pos <= line && line < new_pos[i] {
                    let frac = (line - old_pos) / (new_pos[i] - old_pos);
                    self.events.push(SimEvent::StopLineCrossing {
                        vehicle: veh.id,
                        class: veh.class,
                        lane: veh.lane,
                        line: k,
                        t: t + frac * dt,
                        step,
                    });
                }
            }
        }

        let end = self.network.length();
        let mut exits = Vec::new();
        self.vehicles.retain(|v| {
            if v.position > end {
                exits.push((v.id, v.class));
                false
            } else {
                true
            }
        });
        let t_next_exit = t + dt;
        for (vehicle, class) in exits {
            self.events.push(SimEvent::Exit {
                vehicle,
                class,
                t: t_next_exit,
                step,
            });
        }

        self.clock.step_index += 1;
        self.insert_arrivals();
        self.check_invariants()
    }

    fn insert_arrivals(&mut self) {
        let t = self.t();
        let step = self.clock.step_index;
        let decel = self.config.decel();
        let dt = self.config.dt;
        let s0 = self.config.idm.min_gap;
        for lane in 0..self.pending.len() {
            while let Some(&due) = self.pending[lane].front() {
                if due > t {
                    break;
                }
                let limit = self.network.speed_limits().regular;
                let speed = match self.leader_in_lane(lane, 0.0, VehicleId(u32::MAX)) {
                    None => limit,
                    Some(l) => {
                        let gap = l.rear();
                        if gap < s0 {
                            break;
                        }
                        let room = gap + braking_distance(l.speed, decel, dt) - s0;
                        max_speed_for_braking_distance(room, decel, dt).min(limit)
                    }
                };
                self.pending[lane].pop_front();
                let id = VehicleId(self.next_id);
                self.next_id += 1;
                let mut v = Vehicle::new(id, VehicleClass::Human, lane, 0.0);
                v.speed = speed;
                self.vehicles.push(v);
                self.events.push(SimEvent::Inserted {
                    vehicle: id,
                    lane,
                    t,
                    step,
                });
            }
        }
    }

    /// Collision-freedom plus speed and acceleration boxes.
    pub fn check_invariants(&self) -> Result<(), SimError> {
        let step = self.clock.step_index;
        let fault = |detail: String| SimError::Fault { step, detail };
        for v in &self.vehicles {
            let limit = self.network.speed_limits().for_class(v.class);
            if !(v.position.is_finite() && v.speed.is_finite() && v.accel.is_finite()) {
                return Err(fault(format!("vehicle {} has a non-finite state", v.id)));
            }
            if v.speed < 0.0 || v.speed > limit + BOUND_EPS {
                return Err(fault(format!(
                    "vehicle {} speed {} outside [0, {limit}]",
                    v.id, v.speed
                )));
            }
            let b = self.config.accel_bounds;
            if v.accel < b.min - BOUND_EPS || v.accel > b.max + BOUND_EPS {
                return Err(fault(format!(
                    "vehicle {} accel {} outside bounds",
                    v.id, v.accel
                )));
            }
            if v.lane >= self.network.lanes() {
                return Err(fault(format!(
                    "vehicle {} on missing lane {}",
                    v.id, v.lane
                )));
            }
        }
        for lane in 0..self.network.lanes() {
            let mut in_lane: Vec<&Vehicle> =
                self.vehicles.iter().filter(|v| v.lane == lane).collect();
            in_lane.sort_by(|a, b| b.position.total_cmp(&a.position));
            for pair in in_lane.windows(2) {
                let gap = pair[1].gap_to(pair[0]);
                if gap <= 0.0 {
                    return Err(fault(format!(
                        "collision in lane {lane}: vehicle {} behind {} with gap {gap}",
                        pair[1].id, pair[0].id
                    )));
                }
            }
        }
        Ok(())
    }
}
