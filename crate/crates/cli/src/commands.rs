use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use corridor_core::metrics::{
    percentage_diff_grid, write_grid_csv, CellMetrics, CellOutcome, EpisodeMetrics, Metric,
    SweepCell, SweepResult,
};
use corridor_core::rl::{run_parallel, train, write_curve_csv};
use corridor_core::runner::{cell_metrics, simulate, ControllerChoice, SweepPlan};
use corridor_core::scenario::ScenarioSpec;
use serde::Serialize;

use crate::config::{load_policy, parse_train, read_object, EvalConfig, RunConfig, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::Overrides;

const METRICS: [Metric; 3] = [Metric::TEv, Metric::TCav, Metric::QInter];

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    let f = fs::File::create(path)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Write-then-rename, so an interrupted run never leaves half a file behind.
fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let tmp = path.with_extension("json.tmp");
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&tmp, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn make_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    controller: String,
    scenario: &'a ScenarioSpec,
    metrics: Metrics,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Metrics {
    Simulated(EpisodeMetrics),
    Closed(CellMetrics),
}

pub fn run(config: &Path, out: &Path, ov: &Overrides) -> CliResult<()> {
    let mut cfg = RunConfig::parse(read_object(config)?)?;
    if let Some(seed) = ov.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(path) = &ov.checkpoint {
        cfg.controller = crate::config::ControllerSpec::Policy {
            checkpoint: Some(path.clone()),
            name: None,
        };
    }
    let choice = cfg.controller.resolve(&config_dir(config))?;
    cfg.scenario
        .validate()
        .map_err(corridor_core::Error::from)?;
    make_dir(out)?;
    let name = cfg.controller.name();
    for &seed in &cfg.seeds {
        let spec = ScenarioSpec {
            seed,
            ..cfg.scenario.clone()
        };
        let stem = format!("{name}_seed{seed}");
        let metrics = if let ControllerChoice::Oracle { .. } = choice {
            Metrics::Closed(cell_metrics(&spec, &cfg.options, &choice, cfg.scope)?)
        } else {
            let rec = simulate(&spec, &cfg.options, &choice)?;
            rec.write_csv(create(&out.join(format!("{stem}.csv")))?)?;
            Metrics::Simulated(EpisodeMetrics::from_record(&rec, cfg.scope))
        };
        write_json(
            &out.join(format!("{stem}.json")),
            &RunSummary {
                controller: name.clone(),
                scenario: &spec,
                metrics,
            },
        )?;
        println!("{name} seed {seed}: wrote {stem}.json");
    }
    Ok(())
}

fn cell_file(dir: &Path, spec: &ScenarioSpec) -> PathBuf {
    dir.join(format!("x{}_d{}_s{}.json", spec.x_a, spec.d, spec.seed))
}

fn reuse(path: &Path, spec: &ScenarioSpec) -> Option<SweepCell> {
    let cell: SweepCell = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    (cell.x_a == spec.x_a && cell.d == spec.d && cell.seed == spec.seed).then_some(cell)
}

/// Runs the cells of `plan` that have no result file under `dir` yet and
/// returns every cell in plan order.
fn sweep_one(
    name: &str,
    choice: &ControllerChoice,
    plan: &SweepPlan,
    dir: &Path,
    workers: usize,
) -> CliResult<SweepResult> {
    make_dir(dir)?;
    let specs = plan.specs();
    let done: Vec<Option<SweepCell>> = specs.iter().map(|s| reuse(&cell_file(dir, s), s)).collect();
    let todo: Vec<usize> = (0..specs.len()).filter(|&i| done[i].is_none()).collect();
    let fresh = run_parallel(todo.len(), workers, |j| {
        let spec = &specs[todo[j]];
        let cell = plan.cell(spec, choice);
        write_json(&cell_file(dir, spec), &cell).map(|_| cell)
    });
    let mut fresh = fresh.into_iter();
    let mut result = plan.empty_result(choice);
    result.controller = name.to_string();
    for slot in done {
        let cell = match slot {
            Some(c) => c,
            None => fresh.next().expect("one fresh cell per missing slot")?,
        };
        result.cells.push(cell);
    }
    let count = |f: fn(&CellOutcome) -> bool| result.cells.iter().filter(|c| f(&c.outcome)).count();
    println!(
        "{name}: {} cells, {} run, {} reused, {} infeasible, {} failed",
        specs.len(),
        todo.len(),
        specs.len() - todo.len(),
        count(|o| matches!(o, CellOutcome::Infeasible { .. })),
        count(|o| matches!(o, CellOutcome::Failed { .. })),
    );
    Ok(result)
}

fn write_result(out: &Path, result: &SweepResult) -> CliResult<()> {
    let name = &result.controller;
    write_json(&out.join(format!("{name}.json")), result)?;
    for m in METRICS {
        let grid = result.metric_grid(m);
        write_grid_csv(
            &grid,
            &result.x_axis,
            &result.d_axis,
            create(&out.join(format!("{name}_{}.csv", m.as_str())))?,
        )?;
    }
    Ok(())
}

pub fn sweep(config: &Path, out: &Path, ov: &Overrides) -> CliResult<()> {
    let mut cfg = SweepConfig::parse(read_object(config)?)?;
    if let Some(seed) = ov.seed {
        cfg.plan.seeds = vec![seed];
    }
    let base = config_dir(config);
    let choices = cfg
        .controllers
        .iter()
        .map(|c| c.resolve(&base))
        .collect::<CliResult<Vec<_>>>()?;
    make_dir(out)?;
    let mut results = Vec::new();
    for (spec, choice) in cfg.controllers.iter().zip(&choices) {
        let name = spec.name();
        let dir = out.join("cells").join(&name);
        let r = sweep_one(&name, choice, &cfg.plan, &dir, ov.workers())?;
        write_result(out, &r)?;
        results.push(r);
    }
    // Earlier controllers are the candidates, later ones the baselines.
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            for &m in &cfg.diff_metrics {
                let grid = percentage_diff_grid(a, b, m, cfg.denominator)?;
                let file = format!(
                    "diff_{}_vs_{}_{}.csv",
                    a.controller,
                    b.controller,
                    m.as_str()
                );
                write_grid_csv(&grid, &a.x_axis, &a.d_axis, create(&out.join(&file))?)?;
                println!("wrote {file}");
            }
        }
    }
    Ok(())
}

pub fn train_cmd(config: &Path, out: &Path, ov: &Overrides) -> CliResult<()> {
    let mut cfg = parse_train(read_object(config)?)?;
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(w) = ov.workers {
        cfg.workers = w;
    }
    make_dir(out)?;
    let checkpoint = ov
        .checkpoint
        .clone()
        .unwrap_or_else(|| out.join("policy.json"));
    write_json(&out.join("train_config.json"), &cfg)?;
    let outcome = train(&cfg, Some(&checkpoint))?;
    // Also covers a zero-episode run, which never evaluates.
    outcome.best.save(&checkpoint)?;
    outcome.last.save(&out.join("final_policy.json"))?;
    write_curve_csv(&outcome.curve, create(&out.join("curve.csv"))?)?;
    println!(
        "trained {} episodes; best evaluation return {}; checkpoint {}",
        cfg.episodes,
        outcome
            .best_eval_return
            .map_or("n/a".to_string(), |r| format!("{r:.3}")),
        checkpoint.display()
    );
    Ok(())
}

pub fn eval(config: &Path, out: &Path, ov: &Overrides) -> CliResult<()> {
    let mut cfg = EvalConfig::parse(read_object(config)?)?;
    if let Some(seed) = ov.seed {
        cfg.plan.seeds = vec![seed];
    }
    let path = match (&ov.checkpoint, &cfg.checkpoint) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => config_dir(config).join(p),
        (None, None) => return Err(CliError::config("eval needs --checkpoint")),
    };
    let choice = ControllerChoice::Policy(load_policy(&path)?);
    make_dir(out)?;
    let r = sweep_one(
        "policy",
        &choice,
        &cfg.plan,
        &out.join("cells").join("policy"),
        ov.workers(),
    )?;
    write_result(out, &r)
}
