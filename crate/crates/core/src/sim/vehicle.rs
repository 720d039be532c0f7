use std::fmt;

use serde::{Deserialize, Serialize};

/// Standard vehicle length used for every class.
pub const VEHICLE_LENGTH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleClass {
    Human,
    Cav,
    Ems,
}

impl VehicleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Human => "human",
            VehicleClass::Cav => "cav",
            VehicleClass::Ems => "ems",
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-class speed limits in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimits {
    pub regular: f64,
    pub ems: f64,
}

impl Default for SpeedLimits {
    fn default() -> Self {
        Self {
            regular: 15.0,
            ems: 35.0,
        }
    }
}

impl SpeedLimits {
    pub fn for_class(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Ems => self.ems,
            VehicleClass::Human | VehicleClass::Cav => self.regular,
        }
    }
}

/// One road agent. `position` is the front bumper coordinate along the
/// corridor axis; lane 0 is the left lane, lane 1 the right lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub class: VehicleClass,
    pub lane: usize,
    pub position: f64,
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
}

impl Vehicle {
    pub fn new(id: VehicleId, class: VehicleClass, lane: usize, position: f64) -> Self {
        Self {
            id,
            class,
            lane,
            position,
            speed: 0.0,
            accel: 0.0,
            length: VEHICLE_LENGTH,
        }
    }

    pub fn rear(&self) -> f64 {
        self.position - self.length
    }

    /// Bumper-to-bumper gap from this vehicle's front to `leader`'s rear.
    pub fn gap_to(&self, leader: &Vehicle) -> f64 {
        leader.rear() - self.position
    }
}
