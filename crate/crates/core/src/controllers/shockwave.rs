//! Closed-form shockwave quantities for a discharging queue.
//!
//! Distances are measured upstream from stop line 1. The queue front starts
//! moving at `t0 = 0` and the discharge wave travels upstream at `w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discharge wave speed used unless a run overrides it.
pub const DEFAULT_W: f64 = 10.0;
/// Fraction of the largest admissible cruise speed actually commanded.
pub const CRUISE_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockwaveParams {
    /// Queue-discharge wave speed.
    pub w: f64,
    /// Desired speed of regular traffic.
    #[serde(rename = "U")]
    pub u: f64,
    /// Desired EMS speed.
    #[serde(rename = "V")]
    pub v: f64,
    pub d: f64,
    /// CAV distance to stop line 1; negative past it.
    pub x_a: f64,
    /// Stop-line spacing, two-intersection corridor only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl ShockwaveParams {
    pub fn new(w: f64, u: f64, v: f64, d: f64, x_a: f64) -> Self {
        Self {
            w,
            u,
            v,
            d,
            x_a,
            z: None,
        }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w, self.u, self.v, self.d, self.x_a];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite shockwave parameter in {self:?}"
            )));
        }
        if !(0.0 < self.w && self.w <= self.u && self.u <= self.v) {
            return Err(Error::Domain(format!(
                "need 0 < w <= U <= V, got w={} U={} V={}",
                self.w, self.u, self.v
            )));
        }
        if self.d < 0.0 {
            return Err(Error::Domain(format!("d = {} must be >= 0", self.d)));
        }
        if let Some(z) = self.z {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::Domain(format!("z = {z} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTimes {
    pub x_l: f64,
    /// Wait of the vehicle just ahead of the split point.
    pub t_1: f64,
    /// Wait of the EMS.
    pub t_2: f64,
    /// EMS arrival at the split point.
    pub t_s: f64,
    /// First moment the CAV can move.
    pub t_a: f64,
    /// EMS arrival at the stop line.
    pub t_ev: f64,
    /// Arrival of the vehicle ahead of the split point at the stop line.
    pub t_pre: f64,
}

pub fn optimal_split(p: &ShockwaveParams) -> Result<f64> {
    p.validate()?;
    let (wi, ui, vi) = (1.0 / p.w, 1.0 / p.u, 1.0 / p.v);
    Ok(p.d * (wi + ui) / (wi + 2.0 * ui - vi))
}

/// Time the discharge wave reaches a vehicle `x` meters upstream.
pub fn queue_release_time(x: f64, w: f64) -> f64 {
    x.max(0.0) / w
}

pub fn analytic_times(p: &ShockwaveParams) -> Result<AnalyticTimes> {
    let x_l = optimal_split(p)?;
    let t_1 = x_l / p.w;
    let t_2 = p.d / p.w;
    let t_s = t_2 + (p.d - x_l) / p.u;
    Ok(AnalyticTimes {
        x_l,
        t_1,
        t_2,
        t_s,
        t_a: queue_release_time(p.x_a, p.w),
        t_ev: t_s + x_l / p.v,
        t_pre: t_1 + x_l / p.u,
    })
}

/// Supremum of cruise speeds that keep the CAV from reaching the split point
/// before the EMS. `None` when every speed qualifies.
pub fn cruise_speed_bound(p: &ShockwaveParams, times: &AnalyticTimes) -> Option<f64> {
    let slack = times.t_s - times.t_a;
    if slack <= 0.0 {
        None
    } else {
        Some((p.x_a - times.x_l) / slack)
    }
}

pub fn satisfies_timing(p: &ShockwaveParams, times: &AnalyticTimes, v_cav: f64) -> bool {
    if v_cav <= 0.0 {
        return false;
    }
    (p.x_a - times.x_l) / v_cav > times.t_s - times.t_a
}

/// Cruise speed for a CAV upstream of the split point, or `None` if it
/// should hold instead.
pub fn cruise_speed(p: &ShockwaveParams, times: &AnalyticTimes) -> Option<f64> {
    if p.x_a <= times.x_l {
        return None;
    }
    Some(match cruise_speed_bound(p, times) {
        Some(bound) => (CRUISE_MARGIN * bound).min(p.u),
        None => p.u,
    })
}

/// Whether a CAV `x_past` meters beyond stop line 1 can go through stop line
/// 2 without waiting for the EMS.
pub fn proceeds_without_waiting(z: f64, x_past: f64, d: f64, w: f64, u: f64, v: f64) -> bool {
    let s = z - x_past;
    s / w + s / u <= d / w + d / v
}

/// CAV time to stop line 1 when it cooperates from approach 1.
pub fn cav_time_single(p: &ShockwaveParams, x_l: f64) -> f64 {
    if p.x_a <= x_l {
        p.d / p.w + (p.d - p.x_a) / p.w + p.x_a / p.u
    } else {
        p.x_a / p.w + p.x_a / p.u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTimes {
    pub t_ev: f64,
    pub t_cav: f64,
}

/// Travel times with instantaneous speed changes and no car following.
///
/// Times run to the final stop line. The EMS always gets the optimal split;
/// on the second approach the CAV either goes at once or waits for the EMS
/// to draw level before moving.
pub fn oracle_times(p: &ShockwaveParams) -> Result<OracleTimes> {
    let times = analytic_times(p)?;
    match p.z {
        None => {
            if p.x_a < 0.0 {
                return Err(Error::Domain(format!(
                    "x_a = {} needs a second intersection",
                    p.x_a
                )));
            }
            Ok(OracleTimes {
                t_ev: times.t_ev,
                t_cav: cav_time_single(p, times.x_l),
            })
        }
        Some(z) => {
            let t_ev = times.t_ev + z / p.v;
            let t_cav = if p.x_a >= 0.0 {
                cav_time_single(p, times.x_l) + z / p.u
            } else {
                let x_past = -p.x_a;
                let s = z - x_past;
                if s < 0.0 {
                    return Err(Error::Domain(format!(
                        "x_a = {} lies beyond stop line 2",
                        p.x_a
                    )));
                }
                if proceeds_without_waiting(z, x_past, p.d, p.w, p.u, p.v) {
                    s / p.w + s / p.u
                } else {
                    let release = times.t_ev + x_past / p.v;
                    release.max(s / p.w) + s / p.u
                }
            };
            Ok(OracleTimes { t_ev, t_cav })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(d: f64, x_a: f64) -> ShockwaveParams {
        ShockwaveParams::new(10.0, 15.0, 35.0, d, x_a)
    }

    #[test]
    fn rejects_unordered_speeds() {
        assert!(optimal_split(&ShockwaveParams::new(20.0, 15.0, 35.0, 10.0, 0.0)).is_err());
        assert!(optimal_split(&ShockwaveParams::new(10.0, 15.0, 12.0, 10.0, 0.0)).is_err());
        assert!(optimal_split(&ShockwaveParams::new(0.0, 15.0, 35.0, 10.0, 0.0)).is_err());
        assert!(optimal_split(&base(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn split_edges() {
        assert_eq!(optimal_split(&base(0.0, 0.0)).unwrap(), 0.0);
        let p = ShockwaveParams::new(10.0, 15.0, 15.0, 42.0, 0.0);
        assert!((optimal_split(&p).unwrap() - 42.0).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_gives_zero_times() {
        let t = analytic_times(&base(0.0, 0.0)).unwrap();
        for x in [t.x_l, t.t_1, t.t_2, t.t_s, t.t_a, t.t_ev, t.t_pre] {
            assert_eq!(x, 0.0);
        }
        assert_eq!(oracle_times(&base(0.0, 0.0)).unwrap().t_ev, 0.0);
    }

    #[test]
    fn cruise_speed_respects_timing_condition() {
        let p = base(100.0, 90.0);
        let t = analytic_times(&p).unwrap();
        let v = cruise_speed(&p, &t).unwrap();
        assert!(v > 0.0 && v <= p.u);
        assert!(satisfies_timing(&p, &t, v));
        assert!(cruise_speed(&base(100.0, 50.0), &t).is_none());
    }

    #[test]
    fn oracle_second_approach_waits_when_wave_is_slow() {
        let p = base(50.0, -100.0).with_z(175.0);
        let o = oracle_times(&p).unwrap();
        let t = analytic_times(&p).unwrap();
        assert!((o.t_ev - (t.t_ev + 5.0)).abs() < 1e-12);
        assert!(o.t_cav >= t.t_ev + 100.0 / 35.0 + 75.0 / 15.0 - 1e-12);
    }
}
