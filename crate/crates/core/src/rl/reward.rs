//! Piecewise reward on CAV and EMS speeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::NetworkKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCoefficients {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
}

impl RewardCoefficients {
    pub const SINGLE_INTERSECTION: Self = Self {
        nu1: 0.1,
        nu2: 0.9,
        nu3: 0.0,
        nu4: 1.0,
    };
    pub const TWO_INTERSECTION: Self = Self {
        nu1: 1.0,
        nu2: 0.6,
        nu3: 1.0,
        nu4: 1.0,
    };

    pub fn for_network(kind: NetworkKind) -> Self {
        match kind {
            NetworkKind::OneIntersection => Self::SINGLE_INTERSECTION,
            NetworkKind::TwoIntersection => Self::TWO_INTERSECTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.nu1, self.nu2, self.nu3, self.nu4];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "reward coefficients must be >= 0: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    /// Same lane or no EMS first, then EMS-ahead, then EMS-behind.
    #[default]
    Equation,
    /// Also applies the EMS-behind weights when both share a lane.
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardCase {
    /// `p_cav - p_ev <= 0`, different lanes.
    EmsAhead,
    /// `p_cav - p_ev > 0`.
    EmsBehind,
    /// Same lane, or no EMS.
    Plain,
}

/// The quantities the reward depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInput {
    pub v_cav: f64,
    pub p_cav: f64,
    pub l_cav: usize,
    /// `(v_ev, p_ev, l_ev)` when an EMS is present.
    pub ems: Option<(f64, f64, usize)>,
}

pub fn reward_case(s: &RewardInput, variant: RewardVariant) -> RewardCase {
    let Some((_, p_ev, l_ev)) = s.ems else {
        return RewardCase::Plain;
    };
    let behind = s.p_cav - p_ev > 0.0;
    match variant {
        RewardVariant::Equation if l_ev == s.l_cav => RewardCase::Plain,
        RewardVariant::Prose if behind => RewardCase::EmsBehind,
        RewardVariant::Prose if l_ev == s.l_cav => RewardCase::Plain,
        _ if behind => RewardCase::EmsBehind,
        _ => RewardCase::EmsAhead,
    }
}

pub fn reward(s: &RewardInput, c: &RewardCoefficients, variant: RewardVariant) -> f64 {
    let v_ev = s.ems.map_or(0.0, |e| e.0);
    match reward_case(s, variant) {
        RewardCase::EmsAhead => c.nu1 * v_ev + c.nu2 * s.v_cav,
        RewardCase::EmsBehind => c.nu3 * v_ev + c.nu4 * s.v_cav,
        RewardCase::Plain => s.v_cav,
    }
}
