//! Fixed-step microscopic simulation of a signalized two-lane corridor.

pub mod braking;
mod engine;
pub mod idm;
pub mod lane_change;
pub mod network;
pub mod signal;
pub mod vehicle;

pub use engine::{Arrival, CavCommand, SimClock, SimConfig, SimEvent, Simulation};
pub use idm::{idm_accel, AccelBounds, IdmParams, LeaderGap};
pub use lane_change::{
    ems_lane_change, LaneChangeContext, LaneChangeParams, LaneDecision, LaneNeighbors,
};
pub use network::{CorridorNetwork, NetworkKind};
pub use signal::{signal_state, SignalProgram, SignalState};
pub use vehicle::{SpeedLimits, Vehicle, VehicleClass, VehicleId, VEHICLE_LENGTH};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("input out of domain: {0}")]
    InputDomain(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("vehicle {0} is not a CAV and cannot take commands")]
    CommandForUncontrolled(VehicleId),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("simulation fault at step {step}: {detail}")]
    Fault { step: u64, detail: String },
}
