//! Time-space diagram data.

use std::io::Write;

use super::record::EpisodeRecord;
use crate::error::Result;
use crate::sim::VehicleClass;

/// One polyline per vehicle: every row of vehicles in `lane`, plus every row of
/// the EMS whichever lane it is in. The lane column marks the EMS's segments.
pub fn time_space_export<W: Write>(rec: &EpisodeRecord, lane: usize, out: W) -> Result<()> {
    let mut rows: Vec<_> = rec
        .rows
        .iter()
        .filter(|r| r.lane == lane || r.class == VehicleClass::Ems)
        .collect();
    rows.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id).then(a.step.cmp(&b.step)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vehicle_id", "t", "position", "lane", "class"])?;
    for r in rows {
        w.write_record([
            r.vehicle_id.to_string(),
            r.t.to_string(),
            r.position.to_string(),
            r.lane.to_string(),
            r.class.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A point of a parsed time-space export.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct TimeSpacePoint {
    pub vehicle_id: u32,
    pub t: f64,
    pub position: f64,
    pub lane: usize,
    pub class: String,
}

pub fn read_time_space<R: std::io::Read>(input: R) -> Result<Vec<TimeSpacePoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
