//! Browser bindings: the split calculator, a time-space run, and the
//! second-approach wait/proceed map.
//!
//! Each export has a plain Rust twin so it can be tested off the browser.

use corridor_core::controllers::{
    analytic_times, oracle_times, proceeds_without_waiting, AnalyticTimes, OracleTimes,
    ShockwaveParams,
};
use corridor_core::metrics::{EpisodeMetrics, LaneScope};
use corridor_core::runner::{simulate, ControllerChoice};
use corridor_core::scenario::{ScenarioOptions, ScenarioSpec};
use corridor_core::sim::NetworkKind;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct Split {
    pub times: AnalyticTimes,
    pub oracle: OracleTimes,
}

pub fn split(w: f64, u: f64, v: f64, d: f64, x_a: f64) -> Result<Split, String> {
    let p = ShockwaveParams::new(w, u, v, d, x_a);
    Ok(Split {
        times: analytic_times(&p).map_err(|e| e.to_string())?,
        oracle: oracle_times(&p).map_err(|e| e.to_string())?,
    })
}

/// One vehicle's trace, sampled every step.
#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub id: u32,
    pub class: String,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub lane: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Run {
    pub stop_lines: Vec<f64>,
    pub horizon_s: f64,
    pub traces: Vec<Trace>,
    pub metrics: EpisodeMetrics,
}

fn network(intersections: u32) -> Result<NetworkKind, String> {
    match intersections {
        1 => Ok(NetworkKind::OneIntersection),
        2 => Ok(NetworkKind::TwoIntersection),
        n => Err(format!("{n} intersections; pick 1 or 2")),
    }
}

fn controller(name: &str, w: f64) -> Result<ControllerChoice, String> {
    match name {
        "model_based" => Ok(ControllerChoice::ModelBased { w }),
        "idm_baseline" => Ok(ControllerChoice::IdmBaseline),
        other => Err(format!("unknown controller `{other}`")),
    }
}

pub fn time_space(
    intersections: u32,
    x_a: f64,
    d: f64,
    controller_name: &str,
    w: f64,
    seed: u64,
) -> Result<Run, String> {
    let mut spec = ScenarioSpec::new(network(intersections)?, x_a, d);
    spec.seed = seed;
    let choice = controller(controller_name, w)?;
    let rec = simulate(&spec, &ScenarioOptions::default(), &choice).map_err(|e| e.to_string())?;
    let mut traces: Vec<Trace> = Vec::new();
    let mut rows: Vec<_> = rec.rows.iter().collect();
    rows.sort_by_key(|r| (r.vehicle_id, r.step));
    for r in rows {
        if traces.last().is_none_or(|tr| tr.id != r.vehicle_id) {
            traces.push(Trace {
                id: r.vehicle_id,
                class: format!("{:?}", r.class).to_lowercase(),
                t: Vec::new(),
                x: Vec::new(),
                lane: Vec::new(),
            });
        }
        let tr = traces.last_mut().expect("pushed above");
        tr.t.push(r.t);
        tr.x.push(r.position);
        tr.lane.push(r.lane);
    }
    Ok(Run {
        stop_lines: rec.stop_lines.clone(),
        horizon_s: rec.horizon_s(),
        metrics: EpisodeMetrics::from_record(&rec, LaneScope::Both),
        traces,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    /// CAV distance already covered past line 1.
    pub x_past: Vec<f64>,
    pub d: Vec<f64>,
    /// `proceed[i][j]` for `x_past[i]`, `d[j]`.
    pub proceed: Vec<Vec<bool>>,
}

fn axis(max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

pub fn region_map(z: f64, w: f64, u: f64, v: f64, d_max: f64, n: usize) -> RegionMap {
    let x_past = axis(z, n);
    let d = axis(d_max, n);
    let proceed = x_past
        .iter()
        .map(|&x| {
            d.iter()
                .map(|&dd| proceeds_without_waiting(z, x, dd, w, u, v))
                .collect()
        })
        .collect();
    RegionMap { x_past, d, proceed }
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<JsValue, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e))?;
    serde_wasm_bindgen::to_value(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = split)]
pub fn split_js(w: f64, u: f64, v: f64, d: f64, x_a: f64) -> Result<JsValue, JsValue> {
    to_js(split(w, u, v, d, x_a))
}

#[wasm_bindgen(js_name = timeSpace)]
pub fn time_space_js(
    intersections: u32,
    x_a: f64,
    d: f64,
    controller: &str,
    w: f64,
    seed: u32,
) -> Result<JsValue, JsValue> {
    to_js(time_space(
        intersections,
        x_a,
        d,
        controller,
        w,
        u64::from(seed),
    ))
}

#[wasm_bindgen(js_name = regionMap)]
pub fn region_map_js(
    z: f64,
    w: f64,
    u: f64,
    v: f64,
    d_max: f64,
    n: u32,
) -> Result<JsValue, JsValue> {
    to_js(Ok(region_map(z, w, u, v, d_max, n as usize)))
}
