//! Per-step trajectory log.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{SignalProgram, SimEvent, Simulation, VehicleClass, VehicleId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: u64,
    pub t: f64,
    pub vehicle_id: u32,
    pub class: VehicleClass,
    pub lane: usize,
    pub position: f64,
    pub speed: f64,
    pub accel: f64,
}

/// Everything needed to recompute metrics after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub dt: f64,
    pub horizon_steps: u64,
    pub stop_lines: Vec<f64>,
    pub signals: SignalProgram,
    pub rows: Vec<StepRow>,
    pub events: Vec<SimEvent>,
}

impl EpisodeRecord {
    pub fn new(dt: f64, horizon_steps: u64, stop_lines: Vec<f64>, signals: SignalProgram) -> Self {
        Self {
            dt,
            horizon_steps,
            stop_lines,
            signals,
            rows: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn for_simulation(sim: &Simulation, horizon_steps: u64) -> Self {
        Self::new(
            sim.config().dt,
            horizon_steps,
            sim.network().stop_lines().to_vec(),
            sim.signals().clone(),
        )
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_steps as f64 * self.dt
    }

    pub fn final_line(&self) -> usize {
        self.stop_lines.len().saturating_sub(1)
    }

    /// Appends one row per vehicle currently on the road.
    pub fn capture(&mut self, sim: &Simulation) {
        let clock = sim.clock();
        for v in sim.vehicles() {
            self.rows.push(StepRow {
                step: clock.step_index,
                t: clock.t(),
                vehicle_id: v.id.0,
                class: v.class,
                lane: v.lane,
                position: v.position,
                speed: v.speed,
                accel: v.accel,
            });
        }
    }

    pub fn set_events(&mut self, events: &[SimEvent]) {
        self.events = events.to_vec();
    }

    /// Interpolated time at which `vehicle` crossed stop line `line`.
    pub fn crossing_time(&self, vehicle: VehicleId, line: usize) -> Option<f64> {
        self.events.iter().find_map(|e| match *e {
            SimEvent::StopLineCrossing {
                vehicle: v,
                line: l,
                t,
                ..
            } if v == vehicle && l == line => Some(t),
            _ => None,
        })
    }

    /// All crossings of stop line `line` as `(vehicle, class, lane, t)`, in time order.
    pub fn crossings(&self, line: usize) -> Vec<(VehicleId, VehicleClass, usize, f64)> {
        let mut out: Vec<_> = self
            .events
            .iter()
            .filter_map(|e| match *e {
                SimEvent::StopLineCrossing {
                    vehicle,
                    class,
                    lane,
                    line: l,
                    t,
                    ..
                } if l == line => Some((vehicle, class, lane, t)),
                _ => None,
            })
            .collect();
        out.sort_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)));
        out
    }

    pub fn rows_for(&self, vehicle: VehicleId) -> impl Iterator<Item = &StepRow> {
        self.rows.iter().filter(move |r| r.vehicle_id == vehicle.0)
    }

    /// Step-major, then vehicle id. Intersections the corridor lacks get an
    /// empty signal column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "t",
            "vehicle_id",
            "class",
            "lane",
            "position",
            "speed",
            "accel",
            "signal_state_1",
            "signal_state_2",
        ])?;
        let signal = |t: f64, k: usize| -> String {
            if k < self.stop_lines.len() {
                self.signals.state(t, k).as_str().to_string()
            } else {
                String::new()
            }
        };
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                r.t.to_string(),
                r.vehicle_id.to_string(),
                r.class.as_str().to_string(),
                r.lane.to_string(),
                r.position.to_string(),
                r.speed.to_string(),
                r.accel.to_string(),
                signal(r.t, 0),
                signal(r.t, 1),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
