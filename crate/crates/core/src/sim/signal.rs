use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalState {
    Green,
    Yellow,
    Red,
}

impl SignalState {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalState::Green => "G",
            SignalState::Yellow => "Y",
            SignalState::Red => "R",
        }
    }

    pub fn is_stop(self) -> bool {
        !matches!(self, SignalState::Green)
    }
}

impl fmt::Display for SignalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed-time plan for the corridor direction: green, then yellow, then red
/// while the cross street is served. Each intersection may be shifted by an
/// offset; an offset of zero starts the cycle with green at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProgram {
    pub green_s: f64,
    pub yellow_s: f64,
    pub red_s: f64,
    pub phase_offset_s: Vec<f64>,
}

impl SignalProgram {
    pub fn fixed_time(intersections: usize) -> Self {
        Self {
            green_s: 31.0,
            yellow_s: 6.0,
            red_s: 37.0,
            phase_offset_s: vec![0.0; intersections],
        }
    }

    pub fn cycle(&self) -> f64 {
        self.green_s + self.yellow_s + self.red_s
    }

    /// Seconds into the cycle of `intersection` at episode time `t`.
    pub fn cycle_time(&self, t: f64, intersection: usize) -> f64 {
        let offset = self
            .phase_offset_s
            .get(intersection)
            .copied()
            .unwrap_or(0.0);
        (t - offset).rem_euclid(self.cycle())
    }

    pub fn state(&self, t: f64, intersection: usize) -> SignalState {
        let c = self.cycle_time(t, intersection);
        if c < self.green_s {
            SignalState::Green
        } else if c < self.green_s + self.yellow_s {
            SignalState::Yellow
        } else {
            SignalState::Red
        }
    }

    /// Green window `[start, end)` that contains `t`, or the next one if the
    /// signal is not green at `t`.
    pub fn green_window(&self, t: f64, intersection: usize) -> (f64, f64) {
        let c = self.cycle_time(t, intersection);
        let cycle_start = t - c;
        if c < self.green_s {
            (cycle_start, cycle_start + self.green_s)
        } else {
            let next = cycle_start + self.cycle();
            (next, next + self.green_s)
        }
    }
}

pub fn signal_state(program: &SignalProgram, t: f64, intersection: usize) -> SignalState {
    program.state(t, intersection)
}
