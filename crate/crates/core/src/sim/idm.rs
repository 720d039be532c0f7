//! Intelligent Driver Model car-following law.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired time headway T (s).
    pub time_headway: f64,
    /// Standstill gap s0 (m).
    pub min_gap: f64,
    /// Maximum acceleration a (m/s²).
    pub max_accel: f64,
    /// Comfortable deceleration b (m/s²).
    pub comfort_decel: f64,
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            time_headway: 1.0,
            min_gap: 2.0,
            max_accel: 3.0,
            comfort_decel: 3.0,
            exponent: 4.0,
        }
    }
}

/// Box constraint on applied acceleration (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for AccelBounds {
    fn default() -> Self {
        Self {
            min: -3.0,
            max: 3.0,
        }
    }
}

impl AccelBounds {
    pub fn clamp(&self, a: f64) -> f64 {
        a.clamp(self.min, self.max)
    }
}

/// Leader seen by the follower: bumper gap and closing speed `v - v_leader`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderGap {
    pub gap: f64,
    pub closing_speed: f64,
}

impl IdmParams {
    /// Raw IDM acceleration (unclamped).
    pub fn raw_accel(
        &self,
        v: f64,
        v_desired: f64,
        leader: Option<LeaderGap>,
    ) -> Result<f64, SimError> {
        if !v.is_finite() || !v_desired.is_finite() || v < 0.0 || v_desired <= 0.0 {
            return Err(SimError::InputDomain(format!(
                "idm speeds out of domain: v = {v}, v_desired = {v_desired}"
            )));
        }
        let free = 1.0 - (v / v_desired).powf(self.exponent);
        let interaction = match leader {
            None => 0.0,
            Some(LeaderGap { gap, closing_speed }) => {
                if !gap.is_finite() || !closing_speed.is_finite() || gap <= 0.0 {
                    return Err(SimError::InputDomain(format!(
                        "idm leader out of domain: gap = {gap}, closing speed = {closing_speed}"
                    )));
                }
                let dynamic = v * self.time_headway
                    + v * closing_speed / (2.0 * (self.max_accel * self.comfort_decel).sqrt());
                let desired_gap = self.min_gap + dynamic.max(0.0);
                (desired_gap / gap).powi(2)
            }
        };
        Ok(self.max_accel * (free - interaction))
    }
}

/// IDM acceleration clamped to `bounds`.
pub fn idm_accel(
    params: &IdmParams,
    bounds: &AccelBounds,
    v: f64,
    v_desired: f64,
    leader: Option<LeaderGap>,
) -> Result<f64, SimError> {
    params
        .raw_accel(v, v_desired, leader)
        .map(|a| bounds.clamp(a))
}
