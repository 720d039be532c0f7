use serde::{Deserialize, Serialize};

use super::vehicle::SpeedLimits;
use super::SimError;

/// Length of every approach segment, stop line included.
pub const APPROACH_LENGTH: f64 = 175.0;
/// Length of the junction box between a stop line and the next segment.
pub const BOX_LENGTH: f64 = 20.0;
/// Default stop-line spacing for the two-intersection corridor.
pub const DEFAULT_Z: f64 = APPROACH_LENGTH + BOX_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    OneIntersection,
    TwoIntersection,
}

impl NetworkKind {
    pub fn intersections(self) -> usize {
        match self {
            NetworkKind::OneIntersection => 1,
            NetworkKind::TwoIntersection => 2,
        }
    }
}

/// Straight two-lane corridor through one or two signalized intersections.
///
/// Coordinates grow in the travel direction. The corridor starts at 0 with the
/// first approach, stop line `k` sits at `stop_lines[k]`, and each stop line is
/// followed by a junction box and another segment. The corridor ends one
/// approach length past the last junction box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorNetwork {
    stop_lines: Vec<f64>,
    approach_length: f64,
    box_length: f64,
    lanes: usize,
    speed_limits: SpeedLimits,
}

impl CorridorNetwork {
    pub fn one_intersection() -> Self {
        Self {
            stop_lines: vec![APPROACH_LENGTH],
            approach_length: APPROACH_LENGTH,
            box_length: BOX_LENGTH,
            lanes: 2,
            speed_limits: SpeedLimits::default(),
        }
    }

    /// Two intersections whose stop lines are `z` meters apart.
    pub fn two_intersection(z: f64) -> Result<Self, SimError> {
        if !(z.is_finite() && z > BOX_LENGTH) {
            return Err(SimError::InvalidNetwork(format!(
                "stop-line spacing z = {z} must exceed the junction box length {BOX_LENGTH}"
            )));
        }
        Ok(Self {
            stop_lines: vec![APPROACH_LENGTH, APPROACH_LENGTH + z],
            approach_length: APPROACH_LENGTH,
            box_length: BOX_LENGTH,
            lanes: 2,
            speed_limits: SpeedLimits::default(),
        })
    }

    pub fn for_kind(kind: NetworkKind) -> Self {
        match kind {
            NetworkKind::OneIntersection => Self::one_intersection(),
            NetworkKind::TwoIntersection => {
                Self::two_intersection(DEFAULT_Z).expect("default spacing is valid")
            }
        }
    }

    pub fn kind(&self) -> NetworkKind {
        if self.stop_lines.len() == 1 {
            NetworkKind::OneIntersection
        } else {
            NetworkKind::TwoIntersection
        }
    }

    pub fn stop_lines(&self) -> &[f64] {
        &self.stop_lines
    }

    pub fn intersections(&self) -> usize {
        self.stop_lines.len()
    }

    pub fn stop_line(&self, k: usize) -> f64 {
        self.stop_lines[k]
    }

    pub fn final_stop_line(&self) -> f64 {
        *self.stop_lines.last().expect("at least one intersection")
    }

    /// Distance between consecutive stop lines; `None` with one intersection.
    pub fn z(&self) -> Option<f64> {
        (self.stop_lines.len() == 2).then(|| self.stop_lines[1] - self.stop_lines[0])
    }

    pub fn approach_length(&self) -> f64 {
        self.approach_length
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn speed_limits(&self) -> &SpeedLimits {
        &self.speed_limits
    }

    pub fn length(&self) -> f64 {
        self.final_stop_line() + self.box_length + self.approach_length
    }

    /// Coordinate where the approach to stop line `k` begins.
    pub fn approach_start(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.stop_lines[k - 1] + self.box_length
        }
    }

    /// First stop line strictly ahead of (or exactly at) `position`.
    pub fn next_stop_line(&self, position: f64) -> Option<(usize, f64)> {
        self.stop_lines
            .iter()
            .copied()
            .enumerate()
            .find(|&(_, line)| position <= line)
    }
}
