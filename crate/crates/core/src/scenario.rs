//! Initial queues and inflow for the (x_a, d) experiment family.
//!
//! Distances follow the stop-line frame: `d` is the EMS's distance upstream of
//! stop line 1 and `x_a` the CAV's. A negative `x_a` places the CAV `|x_a|`
//! meters past stop line 1, which on the two-intersection corridor means it is
//! queued on the approach to stop line 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{
    Arrival, CorridorNetwork, NetworkKind, SignalProgram, SimConfig, SimError, Simulation, Vehicle,
    VehicleClass, VehicleId, VEHICLE_LENGTH,
};

/// Front-to-front spacing of a standing queue (vehicle length plus s0).
pub const JAM_SPACING: f64 = 7.0;
/// Queue slots added behind the deepest special vehicle.
pub const EXTRA_SLOTS: usize = 3;

pub const CAV_ID: VehicleId = VehicleId(0);
pub const EMS_ID: VehicleId = VehicleId(1);

const LEFT: usize = 0;
const RIGHT: usize = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub network: NetworkKind,
    pub x_a: f64,
    pub d: f64,
    pub inflow_vph: f64,
    pub seed: u64,
    pub horizon_steps: u32,
}

impl ScenarioSpec {
    pub fn new(network: NetworkKind, x_a: f64, d: f64) -> Self {
        Self {
            network,
            x_a,
            d,
            inflow_vph: 1000.0,
            seed: 0,
            horizon_steps: 600,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "d = {} must be finite and >= 0",
                self.d
            )));
        }
        if !self.x_a.is_finite() {
            return Err(ScenarioError::Invalid(format!(
                "x_a = {} must be finite",
                self.x_a
            )));
        }
        if !(self.inflow_vph.is_finite() && self.inflow_vph > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "inflow_vph = {} must be positive",
                self.inflow_vph
            )));
        }
        if self.horizon_steps == 0 {
            return Err(ScenarioError::Invalid(
                "horizon_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Knobs that are not part of the serialized scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    /// Stop-line spacing for the two-intersection corridor.
    pub z: f64,
    /// Uniform arrival jitter half-width in seconds; zero disables it.
    pub jitter_s: f64,
    pub sim: SimConfig,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            z: crate::sim::network::DEFAULT_Z,
            jitter_s: 0.0,
            sim: SimConfig::default(),
        }
    }
}

/// Human-vehicle distances to the stop line, per lane, for one approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueLayout {
    pub lanes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct InitialState {
    pub spec: ScenarioSpec,
    pub network: CorridorNetwork,
    pub signals: SignalProgram,
    pub config: SimConfig,
    pub vehicles: Vec<Vehicle>,
    pub arrivals: Vec<Arrival>,
    /// One layout per approach, human vehicles only.
    pub layouts: Vec<QueueLayout>,
}

impl InitialState {
    pub fn into_simulation(self) -> Result<Simulation, SimError> {
        Simulation::new(
            self.network,
            self.signals,
            self.config,
            self.vehicles,
            &self.arrivals,
        )
    }
}

/// Where a special vehicle sits: approach index and distance to its stop line.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Placement {
    approach: usize,
    distance: f64,
}

fn locate_cav(spec: &ScenarioSpec, net: &CorridorNetwork) -> Result<Placement, ScenarioError> {
    let max_distance = net.approach_length() - VEHICLE_LENGTH;
    if spec.x_a >= 0.0 {
        if spec.x_a > max_distance {
            return Err(ScenarioError::Infeasible(format!(
                "x_a = {} lies beyond the approach (max {max_distance})",
                spec.x_a
            )));
        }
        return Ok(Placement {
            approach: 0,
            distance: spec.x_a,
        });
    }
    let z = net.z().ok_or_else(|| {
        ScenarioError::Infeasible(format!(
            "x_a = {} places the CAV past the only intersection",
            spec.x_a
        ))
    })?;
    let distance = z + spec.x_a;
    let approach_len = z - net.box_length();
    if distance < 0.0 || distance > approach_len - VEHICLE_LENGTH {
        return Err(ScenarioError::Infeasible(format!(
            "x_a = {} is not on the approach to stop line 2 (distance to it would be {distance})",
            spec.x_a
        )));
    }
    Ok(Placement {
        approach: 1,
        distance,
    })
}

/// Slots at jam spacing on one lane, anchored at `anchor` if given (else at
/// the stop line), up to `depth` and the approach capacity.
fn lane_slots(anchor: Option<f64>, depth: f64, capacity: f64) -> Vec<f64> {
    let limit = depth.min(capacity);
    let mut slots = Vec::new();
    match anchor {
        Some(a) => {
            let ahead = (a / JAM_SPACING).floor() as usize;
            for k in (1..=ahead).rev() {
                slots.push(a - k as f64 * JAM_SPACING);
            }
            let mut k = 1;
            loop {
                let s = a + k as f64 * JAM_SPACING;
                if s > limit + 1e-9 {
                    break;
                }
                slots.push(s);
                k += 1;
            }
        }
        None => {
            let mut k = 0;
            loop {
                let s = k as f64 * JAM_SPACING;
                if s > limit + 1e-9 {
                    break;
                }
                slots.push(s);
                k += 1;
            }
        }
    }
    slots
}

pub fn build_initial_state(spec: &ScenarioSpec) -> Result<InitialState, ScenarioError> {
    build_initial_state_with(spec, &ScenarioOptions::default())
}

pub fn build_initial_state_with(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
) -> Result<InitialState, ScenarioError> {
    spec.validate()?;
    let network = match spec.network {
        NetworkKind::OneIntersection => CorridorNetwork::one_intersection(),
        NetworkKind::TwoIntersection => CorridorNetwork::two_intersection(options.z)?,
    };
    let capacity_0 = network.approach_length() - VEHICLE_LENGTH;
    if spec.d > capacity_0 {
        return Err(ScenarioError::Infeasible(format!(
            "d = {} lies beyond the approach (max {capacity_0})",
            spec.d
        )));
    }
    let cav = locate_cav(spec, &network)?;
    let ems = Placement {
        approach: 0,
        distance: spec.d,
    };

    let extra = EXTRA_SLOTS as f64 * JAM_SPACING;
    let mut vehicles = Vec::new();
    let mut layouts = Vec::new();
    let mut next_id = 2u32;
    for k in 0..network.intersections() {
        let line = network.stop_line(k);
        let capacity = line - network.approach_start(k) - VEHICLE_LENGTH;
        let mut deepest: f64 = 0.0;
        for p in [cav, ems] {
            if p.approach == k {
                deepest = deepest.max(p.distance);
            }
        }
        let depth = deepest + extra;
        let mut layout = QueueLayout {
            lanes: vec![Vec::new(); network.lanes()],
        };
        for lane in 0..network.lanes() {
            let special = match lane {
                LEFT if cav.approach == k => Some(cav.distance),
                RIGHT if ems.approach == k => Some(ems.distance),
                _ => None,
            };
            let slots = lane_slots(special, depth, capacity);
            for &s in &slots {
                vehicles.push(Vehicle::new(
                    VehicleId(next_id),
                    VehicleClass::Human,
                    lane,
                    line - s,
                ));
                next_id += 1;
            }
            layout.lanes[lane] = slots;
        }
        layouts.push(layout);
    }
    vehicles.push(Vehicle::new(
        CAV_ID,
        VehicleClass::Cav,
        LEFT,
        network.stop_line(cav.approach) - cav.distance,
    ));
    vehicles.push(Vehicle::new(
        EMS_ID,
        VehicleClass::Ems,
        RIGHT,
        network.stop_line(0) - ems.distance,
    ));
    check_spacing(&vehicles, options.sim.idm.min_gap)?;
    vehicles.sort_by_key(|v| v.id);

    let horizon_s = spec.horizon_steps as f64 * options.sim.dt;
    let arrivals = inflow_schedule_with(spec, horizon_s, options.jitter_s)?;
    Ok(InitialState {
        spec: spec.clone(),
        signals: SignalProgram::fixed_time(network.intersections()),
        network,
        config: options.sim,
        vehicles,
        arrivals,
        layouts,
    })
}

fn check_spacing(vehicles: &[Vehicle], min_gap: f64) -> Result<(), ScenarioError> {
    let lanes = vehicles.iter().map(|v| v.lane).max().map_or(0, |m| m + 1);
    for lane in 0..lanes {
        let mut in_lane: Vec<&Vehicle> = vehicles.iter().filter(|v| v.lane == lane).collect();
        in_lane.sort_by(|a, b| b.position.total_cmp(&a.position));
        for pair in in_lane.windows(2) {
            let gap = pair[1].gap_to(pair[0]);
            if gap < min_gap - 1e-9 {
                return Err(ScenarioError::Infeasible(format!(
                    "vehicles {} and {} overlap in lane {lane} (gap {gap:.3} m)",
                    pair[1].id, pair[0].id
                )));
            }
        }
    }
    Ok(())
}

/// Arrivals at the upstream end with uniform headway `3600 / inflow_vph`,
/// alternating lanes starting with the left lane.
pub fn inflow_schedule(spec: &ScenarioSpec, horizon_s: f64) -> Result<Vec<Arrival>, ScenarioError> {
    inflow_schedule_with(spec, horizon_s, 0.0)
}

pub fn inflow_schedule_with(
    spec: &ScenarioSpec,
    horizon_s: f64,
    jitter_s: f64,
) -> Result<Vec<Arrival>, ScenarioError> {
    if !(spec.inflow_vph.is_finite() && spec.inflow_vph > 0.0) {
        return Err(ScenarioError::Invalid(format!(
            "inflow_vph = {} must be positive",
            spec.inflow_vph
        )));
    }
    let headway = 3600.0 / spec.inflow_vph;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let nominal = k as f64 * headway;
        if nominal > horizon_s {
            break;
        }
        let t = if jitter_s > 0.0 {
            (nominal + rng.gen_range(-jitter_s..=jitter_s)).max(0.0)
        } else {
            nominal
        };
        out.push(Arrival {
            t,
            lane: ((k - 1) % 2) as usize,
        });
        k += 1;
    }
    Ok(out)
}

/// Default sweep axes. Queue slots start 1 m from the stop line and repeat
/// every 7.5 m; on the two-intersection corridor three CAV positions sit on
/// the approach to stop line 2.
pub fn default_axes(network: NetworkKind) -> (Vec<f64>, Vec<f64>) {
    let slots: Vec<f64> = (0..8).map(|k| 1.0 + 7.5 * k as f64).collect();
    let x_a = match network {
        NetworkKind::OneIntersection => slots.clone(),
        NetworkKind::TwoIntersection => {
            let mut xs = vec![-191.0, -183.5, -176.0];
            xs.extend(slots.iter().take(5));
            xs
        }
    };
    (x_a, slots)
}

/// Cartesian grid of scenarios, x_a-major.
pub fn sweep_grid(base: &ScenarioSpec, x_axis: &[f64], d_axis: &[f64]) -> Vec<ScenarioSpec> {
    x_axis
        .iter()
        .flat_map(|&x_a| {
            d_axis.iter().map(move |&d| ScenarioSpec {
                x_a,
                d,
                ..base.clone()
            })
        })
        .collect()
}
