//! Drive episodes to the horizon, one cell or a whole (x_a, d) grid.

use serde::{Deserialize, Serialize};

use crate::controllers::{
    oracle_times, CavController, ControllerKind, IdmBaseline, ModelBased, PolicyController,
    ShockwaveParams,
};
use crate::error::{Error, Result};
use crate::metrics::{
    CellMetrics, CellOutcome, EpisodeMetrics, EpisodeRecord, LaneScope, SweepCell, SweepResult,
};
use crate::rl::{run_parallel, GaussianPolicy};
use crate::scenario::{
    build_initial_state_with, default_axes, sweep_grid, InitialState, ScenarioError,
    ScenarioOptions, ScenarioSpec, CAV_ID,
};
use crate::sim::{CavCommand, CorridorNetwork, NetworkKind, Simulation, VehicleClass};

/// Runs the full horizon. `make` sees the simulator at `t0` so controllers can
/// read their initial geometry.
pub fn run_episode<F>(state: InitialState, make: F) -> Result<EpisodeRecord>
where
    F: FnOnce(&Simulation) -> Result<Box<dyn CavController>>,
{
    let horizon = u64::from(state.spec.horizon_steps);
    let mut sim = state.into_simulation()?;
    let mut controller = make(&sim)?;
    let mut rec = EpisodeRecord::for_simulation(&sim, horizon);
    rec.capture(&sim);
    for _ in 0..horizon {
        let commands: Vec<CavCommand> = match controller.command(&sim)? {
            Some(accel) if sim.vehicle(CAV_ID).is_some() => vec![CavCommand {
                vehicle: CAV_ID,
                accel,
            }],
            _ => Vec::new(),
        };
        sim.step(&commands)?;
        rec.capture(&sim);
    }
    rec.set_events(sim.events());
    log::debug!(
        "episode done: {} rows, {} events, controller {}",
        rec.rows.len(),
        rec.events.len(),
        controller.name()
    );
    Ok(rec)
}

/// Shockwave inputs for a scenario, taking speeds from the network limits.
pub fn shockwave_params(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
    w: f64,
) -> Result<ShockwaveParams> {
    let net = match spec.network {
        NetworkKind::OneIntersection => CorridorNetwork::one_intersection(),
        NetworkKind::TwoIntersection => CorridorNetwork::two_intersection(options.z)?,
    };
    let limits = net.speed_limits();
    let mut p = ShockwaveParams::new(
        w,
        limits.for_class(VehicleClass::Cav),
        limits.for_class(VehicleClass::Ems),
        spec.d,
        spec.x_a,
    );
    if let Some(z) = net.z() {
        p = p.with_z(z);
    }
    Ok(p)
}

/// Closed-form metrics; throughput is not defined for the oracle.
pub fn oracle_cell(spec: &ScenarioSpec, options: &ScenarioOptions, w: f64) -> Result<CellMetrics> {
    // Feasibility follows the simulated scenarios exactly.
    build_initial_state_with(spec, options)?;
    let o = oracle_times(&shockwave_params(spec, options, w)?)?;
    Ok(CellMetrics {
        t_ev: Some(o.t_ev),
        t_cav: Some(o.t_cav),
        q_inter: None,
    })
}

/// Which controller drives the CAV, with whatever it needs.
#[derive(Debug, Clone)]
pub enum ControllerChoice {
    ModelBased {
        w: f64,
    },
    /// Closed form only; never simulated.
    Oracle {
        w: f64,
    },
    Policy(GaussianPolicy),
    IdmBaseline,
}

impl ControllerChoice {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerChoice::ModelBased { .. } => ControllerKind::ModelBased,
            ControllerChoice::Oracle { .. } => ControllerKind::Oracle,
            ControllerChoice::Policy(_) => ControllerKind::Policy,
            ControllerChoice::IdmBaseline => ControllerKind::IdmBaseline,
        }
    }
}

/// Builds the scenario and runs it under `choice`.
pub fn simulate(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
    choice: &ControllerChoice,
) -> Result<EpisodeRecord> {
    let state = build_initial_state_with(spec, options)?;
    match choice {
        ControllerChoice::ModelBased { w } => {
            let w = *w;
            run_episode(state, move |sim| Ok(Box::new(ModelBased::new(sim, w)?)))
        }
        ControllerChoice::Policy(p) => {
            run_episode(state, |_| Ok(Box::new(PolicyController::new(p.clone()))))
        }
        ControllerChoice::IdmBaseline => run_episode(state, |_| Ok(Box::new(IdmBaseline))),
        ControllerChoice::Oracle { .. } => Err(Error::Config("the oracle is not simulated".into())),
    }
}

pub fn cell_metrics(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
    choice: &ControllerChoice,
    scope: LaneScope,
) -> Result<CellMetrics> {
    if let ControllerChoice::Oracle { w } = choice {
        return oracle_cell(spec, options, *w);
    }
    let m = EpisodeMetrics::from_record(&simulate(spec, options, choice)?, scope);
    Ok(CellMetrics {
        t_ev: m.t_ev,
        t_cav: m.t_cav,
        q_inter: m.q_inter,
    })
}

/// Like [`cell_metrics`], but placement problems become `Infeasible` and
/// anything else `Failed`, so a sweep can carry on.
pub fn cell_outcome(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
    choice: &ControllerChoice,
    scope: LaneScope,
) -> CellOutcome {
    match cell_metrics(spec, options, choice, scope) {
        Ok(metrics) => CellOutcome::Ok { metrics },
        Err(Error::Scenario(e @ (ScenarioError::Infeasible(_) | ScenarioError::Invalid(_)))) => {
            CellOutcome::Infeasible {
                reason: e.to_string(),
            }
        }
        Err(e) => {
            log::warn!("cell x_a={} d={} failed: {e}", spec.x_a, spec.d);
            CellOutcome::Failed {
                reason: e.to_string(),
            }
        }
    }
}

/// A grid of scenarios sharing everything except `(x_a, d, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: ScenarioSpec,
    pub x_axis: Vec<f64>,
    pub d_axis: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub options: ScenarioOptions,
    #[serde(default)]
    pub scope: LaneScope,
}

impl SweepPlan {
    /// The published axes for `network`, one seed.
    pub fn for_network(network: NetworkKind) -> Self {
        let (x_axis, d_axis) = default_axes(network);
        Self {
            base: ScenarioSpec::new(network, 0.0, 0.0),
            x_axis,
            d_axis,
            seeds: vec![0],
            options: ScenarioOptions::default(),
            scope: LaneScope::Both,
        }
    }

    /// x-major, then d, then seed.
    pub fn specs(&self) -> Vec<ScenarioSpec> {
        sweep_grid(&self.base, &self.x_axis, &self.d_axis)
            .into_iter()
            .flat_map(|s| {
                self.seeds
                    .iter()
                    .map(move |&seed| ScenarioSpec { seed, ..s.clone() })
            })
            .collect()
    }

    pub fn cell(&self, spec: &ScenarioSpec, choice: &ControllerChoice) -> SweepCell {
        SweepCell {
            x_a: spec.x_a,
            d: spec.d,
            seed: spec.seed,
            outcome: cell_outcome(spec, &self.options, choice, self.scope),
        }
    }

    pub fn empty_result(&self, choice: &ControllerChoice) -> SweepResult {
        SweepResult::new(
            choice.kind().as_str(),
            self.base.network,
            self.x_axis.clone(),
            self.d_axis.clone(),
        )
    }
}

/// Runs every cell of `plan`; results come back in plan order whatever the
/// worker count.
pub fn run_sweep(choice: &ControllerChoice, plan: &SweepPlan, workers: usize) -> SweepResult {
    let specs = plan.specs();
    let mut result = plan.empty_result(choice);
    result.cells = run_parallel(specs.len(), workers, |i| plan.cell(&specs[i], choice));
    result
}
