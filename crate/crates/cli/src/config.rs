//! JSON configs. A file only needs `network` plus whatever it changes; the
//! rest comes from that network's defaults.

use std::path::{Path, PathBuf};

use corridor_core::controllers::DEFAULT_W;
use corridor_core::metrics::{Denominator, LaneScope, Metric};
use corridor_core::rl::{GaussianPolicy, TrainConfig};
use corridor_core::runner::{ControllerChoice, SweepPlan};
use corridor_core::scenario::{ScenarioOptions, ScenarioSpec};
use corridor_core::sim::NetworkKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

fn default_w() -> f64 {
    DEFAULT_W
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    ModelBased {
        #[serde(default = "default_w")]
        w: f64,
        #[serde(default)]
        name: Option<String>,
    },
    Oracle {
        #[serde(default = "default_w")]
        w: f64,
        #[serde(default)]
        name: Option<String>,
    },
    Policy {
        #[serde(default)]
        checkpoint: Option<PathBuf>,
        #[serde(default)]
        name: Option<String>,
    },
    IdmBaseline {
        #[serde(default)]
        name: Option<String>,
    },
}

impl ControllerSpec {
    /// Label used in output file names.
    pub fn name(&self) -> String {
        let (given, kind) = match self {
            ControllerSpec::ModelBased { name, .. } => (name, "model_based"),
            ControllerSpec::Oracle { name, .. } => (name, "oracle"),
            ControllerSpec::Policy { name, .. } => (name, "policy"),
            ControllerSpec::IdmBaseline { name } => (name, "idm_baseline"),
        };
        given.clone().unwrap_or_else(|| kind.to_string())
    }

    /// Relative checkpoint paths are taken from the config file's directory.
    pub fn resolve(&self, base: &Path) -> CliResult<ControllerChoice> {
        Ok(match self {
            ControllerSpec::ModelBased { w, .. } => ControllerChoice::ModelBased { w: *w },
            ControllerSpec::Oracle { w, .. } => ControllerChoice::Oracle { w: *w },
            ControllerSpec::IdmBaseline { .. } => ControllerChoice::IdmBaseline,
            ControllerSpec::Policy { checkpoint, .. } => {
                let path = checkpoint
                    .as_ref()
                    .ok_or_else(|| CliError::config("controller \"policy\" needs a checkpoint"))?;
                ControllerChoice::Policy(load_policy(&base.join(path))?)
            }
        })
    }
}

pub fn load_policy(path: &Path) -> CliResult<GaussianPolicy> {
    if !path.is_file() {
        return Err(CliError::config(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    GaussianPolicy::load(path)
        .map_err(|e| CliError::from(e).context(format!("checkpoint {}", path.display())))
}

/// Overlays `over` onto `base`. Keys that `base` lacks are typos, so they are
/// rejected rather than silently ignored.
pub fn merge(base: &mut Value, over: Value, at: &str) -> CliResult<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let path = if at.is_empty() {
                    k.clone()
                } else {
                    format!("{at}.{k}")
                };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => return Err(CliError::config(format!("unknown field `{path}`"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn with_defaults<T: Serialize + DeserializeOwned>(
    defaults: &T,
    over: Value,
    at: &str,
) -> CliResult<T> {
    let mut v = serde_json::to_value(defaults)?;
    merge(&mut v, over, at)?;
    serde_json::from_value(v).map_err(|e| CliError::config(format!("{at}: {e}")))
}

pub fn read_object(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::config(format!(
            "{}: expected a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::config(format!("{}: {e}", path.display()))),
    }
}

fn take<T: DeserializeOwned>(m: &mut Map<String, Value>, key: &str) -> CliResult<Option<T>> {
    m.remove(key)
        .map(|v| serde_json::from_value(v).map_err(|e| CliError::config(format!("{key}: {e}"))))
        .transpose()
}

fn take_network(m: &mut Map<String, Value>) -> CliResult<NetworkKind> {
    take(m, "network")?.ok_or_else(|| CliError::config("missing field `network`"))
}

fn reject_leftovers(m: &Map<String, Value>) -> CliResult<()> {
    match m.keys().next() {
        Some(k) => Err(CliError::config(format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub options: ScenarioOptions,
    pub controller: ControllerSpec,
    pub seeds: Vec<u64>,
    pub scope: LaneScope,
}

impl RunConfig {
    pub fn parse(mut m: Map<String, Value>) -> CliResult<Self> {
        let mut scenario: Map<String, Value> = take(&mut m, "scenario")?
            .ok_or_else(|| CliError::config("missing field `scenario`"))?;
        let network = take_network(&mut scenario)?;
        let scenario = with_defaults(
            &ScenarioSpec::new(network, 0.0, 0.0),
            Value::Object(scenario),
            "scenario",
        )?;
        let options = match m.remove("options") {
            Some(v) => with_defaults(&ScenarioOptions::default(), v, "options")?,
            None => ScenarioOptions::default(),
        };
        let controller = take(&mut m, "controller")?
            .ok_or_else(|| CliError::config("missing field `controller`"))?;
        let seeds = take(&mut m, "seeds")?.unwrap_or_else(|| vec![scenario.seed]);
        let scope = take(&mut m, "scope")?.unwrap_or_default();
        reject_leftovers(&m)?;
        Ok(Self {
            scenario,
            options,
            controller,
            seeds,
            scope,
        })
    }
}

fn parse_plan(m: Map<String, Value>) -> CliResult<SweepPlan> {
    let mut m = m;
    let network = take_network(&mut m)?;
    let defaults = SweepPlan::for_network(network);
    let mut plan: SweepPlan = with_defaults(&defaults, Value::Object(m), "")?;
    plan.base.network = network;
    Ok(plan)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub plan: SweepPlan,
    pub controllers: Vec<ControllerSpec>,
    /// One percentage-difference grid per controller pair and metric.
    pub diff_metrics: Vec<Metric>,
    pub denominator: Denominator,
}

impl SweepConfig {
    pub fn parse(mut m: Map<String, Value>) -> CliResult<Self> {
        let controllers: Vec<ControllerSpec> = take(&mut m, "controllers")?
            .ok_or_else(|| CliError::config("missing field `controllers`"))?;
        let diff_metrics = take(&mut m, "diff_metrics")?.unwrap_or_else(|| vec![Metric::TEv]);
        let denominator = take(&mut m, "denominator")?.unwrap_or_default();
        let mut names: Vec<String> = controllers.iter().map(ControllerSpec::name).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::config(format!(
                "controller name `{}` is used twice; set `name` to tell them apart",
                w[0]
            )));
        }
        Ok(Self {
            plan: parse_plan(m)?,
            controllers,
            diff_metrics,
            denominator,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub plan: SweepPlan,
    pub checkpoint: Option<PathBuf>,
}

impl EvalConfig {
    pub fn parse(mut m: Map<String, Value>) -> CliResult<Self> {
        let checkpoint = take(&mut m, "checkpoint")?;
        Ok(Self {
            plan: parse_plan(m)?,
            checkpoint,
        })
    }
}

pub fn parse_train(mut m: Map<String, Value>) -> CliResult<TrainConfig> {
    let network = take_network(&mut m)?;
    let mut cfg: TrainConfig =
        with_defaults(&TrainConfig::for_network(network), Value::Object(m), "")?;
    cfg.network = network;
    Ok(cfg)
}
