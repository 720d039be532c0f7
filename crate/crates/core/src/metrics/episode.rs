//! Travel times and stop-line throughput for one episode.

use serde::{Deserialize, Serialize};

use super::record::EpisodeRecord;
use crate::scenario::{CAV_ID, EMS_ID};
use crate::sim::{VehicleClass, VehicleId};

/// Time from `t0 = 0` until `vehicle` crosses the final stop line, or `None`
/// if it never did within the horizon.
pub fn travel_time(rec: &EpisodeRecord, vehicle: VehicleId) -> Option<f64> {
    rec.crossing_time(vehicle, rec.final_line())
        .filter(|&t| t <= rec.horizon_s() + 1e-9)
}

pub fn travel_time_ems(rec: &EpisodeRecord) -> Option<f64> {
    travel_time(rec, EMS_ID)
}

pub fn travel_time_cav(rec: &EpisodeRecord) -> Option<f64> {
    travel_time(rec, CAV_ID)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaneScope {
    #[default]
    Both,
    Lane(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// Vehicles per second.
    pub q: f64,
    pub n: usize,
    pub headway_sum: f64,
    /// No vehicle followed the EMS across within the window.
    pub degenerate: bool,
    pub window_start: f64,
    pub window_end: f64,
}

/// `q = N / sum(h_i)` with the first headway measured from `t_start`.
pub fn throughput_from_crossings(t_start: f64, t_end: f64, crossings: &[f64]) -> Throughput {
    let mut times: Vec<f64> = crossings
        .iter()
        .copied()
        .filter(|&t| t > t_start && t <= t_end)
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let headway_sum = times.last().map_or(0.0, |last| last - t_start);
    let degenerate = n == 0 || headway_sum <= 0.0;
    Throughput {
        q: if degenerate {
            0.0
        } else {
            n as f64 / headway_sum
        },
        n,
        headway_sum,
        degenerate,
        window_start: t_start,
        window_end: t_end,
    }
}

/// Throughput at the final stop line from the EMS crossing to the end of the
/// green phase it crossed in (or the next one, if it went through on yellow
/// or red). `None` when the EMS never crossed.
pub fn throughput(rec: &EpisodeRecord, scope: LaneScope) -> Option<Throughput> {
    let line = rec.final_line();
    let t_ems = travel_time_ems(rec)?;
    let (_, green_end) = rec.signals.green_window(t_ems, line);
    let t_end = green_end.min(rec.horizon_s());
    let times: Vec<f64> = rec
        .crossings(line)
        .into_iter()
        .filter(|&(_, class, lane, _)| {
            class != VehicleClass::Ems
                && match scope {
                    LaneScope::Both => true,
                    LaneScope::Lane(l) => lane == l,
                }
        })
        .map(|(_, _, _, t)| t)
        .collect();
    Some(throughput_from_crossings(t_ems, t_end, &times))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub t_ev: Option<f64>,
    pub t_cav: Option<f64>,
    pub q_inter: Option<f64>,
    pub throughput: Option<Throughput>,
}

impl EpisodeMetrics {
    pub fn from_record(rec: &EpisodeRecord, scope: LaneScope) -> Self {
        let throughput = throughput(rec, scope);
        Self {
            t_ev: travel_time_ems(rec),
            t_cav: travel_time_cav(rec),
            q_inter: throughput.map(|q| q.q),
            throughput,
        }
    }
}
