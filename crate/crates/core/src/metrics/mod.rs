//! Evaluation quantities and figure-ready exports.

mod episode;
mod export;
mod record;
mod sweep;

pub use episode::{
    throughput, throughput_from_crossings, travel_time, travel_time_cav, travel_time_ems,
    EpisodeMetrics, LaneScope, Throughput,
};
pub use export::{read_time_space, time_space_export, TimeSpacePoint};
pub use record::{EpisodeRecord, StepRow};
pub use sweep::{
    percentage_diff_grid, write_grid_csv, CellMetrics, CellOutcome, Denominator, Grid, Metric,
    SweepCell, SweepResult,
};
