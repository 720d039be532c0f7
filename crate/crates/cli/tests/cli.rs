use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn corridor(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corridor"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, v: Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_config(controller: Value) -> Value {
    json!({
        "scenario": {"network": "one_intersection", "x_a": 16.0, "d": 8.5},
        "controller": controller
    })
}

#[test]
fn minimal_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        run_config(json!({"kind": "model_based"})),
    );
    let out = dir.path().join("out");
    let o = corridor(&["run"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("model_based_seed0.csv").is_file());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_based_seed0.json")).unwrap())
            .unwrap();
    assert!(summary["metrics"]["t_ev"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        run_config(json!({"kind": "idm_baseline"})),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&corridor(&["run", "--seed", "3"], &cfg, &a)), 0);
    assert_eq!(code(&corridor(&["run", "--seed", "3"], &cfg, &b)), 0);
    for f in ["idm_baseline_seed3.csv", "idm_baseline_seed3.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn missing_checkpoint_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        run_config(json!({"kind": "policy", "checkpoint": "nowhere.json"})),
    );
    let o = corridor(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 2);
    let cfg = write_config(
        dir.path(),
        "bare.json",
        run_config(json!({"kind": "policy"})),
    );
    assert_eq!(code(&corridor(&["run"], &cfg, &dir.path().join("out"))), 2);
}

#[test]
fn bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        code(&corridor(&["run"], &dir.path().join("absent.json"), &out)),
        2
    );
    let typo = write_config(
        dir.path(),
        "typo.json",
        json!({
            "scenario": {"network": "one_intersection", "x_a": 16.0, "dd": 8.5},
            "controller": {"kind": "model_based"}
        }),
    );
    assert_eq!(code(&corridor(&["run"], &typo, &out)), 2);
    let cfg = write_config(
        dir.path(),
        "run.json",
        run_config(json!({"kind": "model_based"})),
    );
    assert_eq!(code(&corridor(&["run", "--workers", "0"], &cfg, &out)), 2);
}

#[test]
fn infeasible_scenario_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Farther back than the approach is long.
    let cfg = write_config(
        dir.path(),
        "run.json",
        json!({
            "scenario": {"network": "one_intersection", "x_a": 500.0, "d": 16.0},
            "controller": {"kind": "model_based"}
        }),
    );
    let o = corridor(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

fn sweep_config() -> Value {
    json!({
        "network": "one_intersection",
        "x_axis": [16.0, 31.0],
        "d_axis": [1.0, 8.5],
        "controllers": [{"kind": "oracle"}, {"kind": "model_based"}]
    })
}

fn cell_files(out: &Path) -> usize {
    fs::read_dir(out.join("cells"))
        .unwrap()
        .map(|d| fs::read_dir(d.unwrap().path()).unwrap().count())
        .sum()
}

#[test]
fn sweep_counts_cells_and_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", sweep_config());
    let out = dir.path().join("out");
    let o = corridor(&["sweep", "--workers", "2"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(cell_files(&out), 8);
    let diffs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let n = e.unwrap().file_name().into_string().unwrap();
            n.starts_with("diff_").then_some(n)
        })
        .collect();
    assert_eq!(
        diffs,
        vec!["diff_oracle_vs_model_based_t_ev.csv".to_string()]
    );
    let r: Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_based.json")).unwrap()).unwrap();
    assert_eq!(r["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_resumes_only_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", sweep_config());
    let out = dir.path().join("out");
    assert_eq!(code(&corridor(&["sweep"], &cfg, &out)), 0);
    let full = fs::read(out.join("model_based.json")).unwrap();

    // Drop one cell and mark another so reuse is visible.
    let cells = out.join("cells").join("model_based");
    fs::remove_file(cells.join("x16_d1_s0.json")).unwrap();
    let kept = cells.join("x31_d8.5_s0.json");
    let mut cell: Value = serde_json::from_str(&fs::read_to_string(&kept).unwrap()).unwrap();
    cell["metrics"]["t_ev"] = json!(1234.5);
    fs::write(&kept, cell.to_string()).unwrap();

    let o = corridor(&["sweep"], &cfg, &out);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("model_based: 4 cells, 1 run, 3 reused"),
        "{}",
        stdout(&o)
    );
    let r: Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_based.json")).unwrap()).unwrap();
    assert!(r.to_string().contains("1234.5"));

    // Restoring the marked cell gives back the uninterrupted result.
    fs::remove_file(&kept).unwrap();
    assert_eq!(code(&corridor(&["sweep"], &cfg, &out)), 0);
    assert_eq!(fs::read(out.join("model_based.json")).unwrap(), full);
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "train.json",
        json!({
            "network": "one_intersection",
            "episodes": 20,
            "episodes_per_iteration": 10,
            "hidden": [8],
            "eval_x_a": [16.0],
            "eval_d": [8.5]
        }),
    );
    let out = dir.path().join("train");
    let o = corridor(&["train", "--workers", "2"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    let checkpoint = out.join("policy.json");
    assert!(checkpoint.is_file() && out.join("final_policy.json").is_file());

    let grid = write_config(
        dir.path(),
        "grid.json",
        json!({"network": "one_intersection", "x_axis": [16.0], "d_axis": [1.0, 8.5]}),
    );
    let ck = checkpoint.to_str().unwrap();
    let (a, b) = (dir.path().join("e1"), dir.path().join("e2"));
    assert_eq!(code(&corridor(&["eval", "--checkpoint", ck], &grid, &a)), 0);
    assert_eq!(code(&corridor(&["eval", "--checkpoint", ck], &grid, &b)), 0);
    assert_eq!(
        fs::read(a.join("policy.json")).unwrap(),
        fs::read(b.join("policy.json")).unwrap()
    );
    let r: Value =
        serde_json::from_str(&fs::read_to_string(a.join("policy.json")).unwrap()).unwrap();
    assert_eq!(r["cells"].as_array().unwrap().len(), 2);

    let empty = write_config(
        dir.path(),
        "empty.json",
        json!({"network": "one_intersection", "x_axis": [], "d_axis": []}),
    );
    let e = dir.path().join("e3");
    assert_eq!(
        code(&corridor(&["eval", "--checkpoint", ck], &empty, &e)),
        0
    );
    let r: Value =
        serde_json::from_str(&fs::read_to_string(e.join("policy.json")).unwrap()).unwrap();
    assert!(r["cells"].as_array().unwrap().is_empty());

    assert_eq!(code(&corridor(&["eval"], &grid, &dir.path().join("e4"))), 2);
}

fn parse_grid(text: &str) -> Vec<Vec<Option<f64>>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|c| c.parse().ok()).collect())
        .collect()
}

/// Oracle against model-based EMS times on the default grids, checked
/// against a stored run.
#[test]
fn oracle_diff_grid_matches_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    for network in ["one_intersection", "two_intersection"] {
        let cfg = write_config(
            dir.path(),
            &format!("{network}.json"),
            json!({"network": network, "controllers": [{"kind": "oracle"}, {"kind": "model_based"}]}),
        );
        let out = dir.path().join(network);
        assert_eq!(code(&corridor(&["sweep"], &cfg, &out)), 0);
        let got = parse_grid(
            &fs::read_to_string(out.join("diff_oracle_vs_model_based_t_ev.csv")).unwrap(),
        );
        let want = parse_grid(
            &fs::read_to_string(
                Path::new(env!("CARGO_MANIFEST_DIR"))
                    .join("tests/snapshots")
                    .join(format!("oracle_vs_model_based_{network}.csv")),
            )
            .unwrap(),
        );
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().flatten().zip(want.iter().flatten()) {
            match (g, w) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-6, "{network}: {g} vs {w}"),
                (None, None) => {}
                other => panic!("{network}: feasibility changed {other:?}"),
            }
        }
        // The oracle never loses, and on one intersection a longer queue
        // ahead of the EMS narrows its lead.
        assert!(got.iter().flatten().flatten().all(|&v| v > 0.0));
        if network == "one_intersection" {
            for row in &got {
                let row: Vec<f64> = row.iter().flatten().copied().collect();
                assert!(row.first() > row.last());
            }
        }
    }
}
