//! Grid results over (x_a, d) and the percentage-difference heatmaps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::NetworkKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub t_ev: Option<f64>,
    pub t_cav: Option<f64>,
    pub q_inter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { metrics: CellMetrics },
    Infeasible { reason: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub x_a: f64,
    pub d: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TEv,
    TCav,
    QInter,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TEv => "t_ev",
            Metric::TCav => "t_cav",
            Metric::QInter => "q_inter",
        }
    }

    fn pick(self, m: &CellMetrics) -> Option<f64> {
        match self {
            Metric::TEv => m.t_ev,
            Metric::TCav => m.t_cav,
            Metric::QInter => m.q_inter,
        }
    }

    /// Smaller is better for times, larger for throughput.
    fn higher_is_better(self) -> bool {
        matches!(self, Metric::QInter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub controller: String,
    pub network: NetworkKind,
    pub x_axis: Vec<f64>,
    pub d_axis: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

/// Rows follow `x_axis`, columns `d_axis`.
pub type Grid = Vec<Vec<Option<f64>>>;

impl SweepResult {
    pub fn new(
        controller: impl Into<String>,
        network: NetworkKind,
        x_axis: Vec<f64>,
        d_axis: Vec<f64>,
    ) -> Self {
        Self {
            controller: controller.into(),
            network,
            x_axis,
            d_axis,
            cells: Vec::new(),
        }
    }

    pub fn cells_at(&self, x_a: f64, d: f64) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(move |c| c.x_a == x_a && c.d == d)
    }

    /// Seed-averaged metric per cell; a cell with no finished run is missing.
    pub fn metric_grid(&self, metric: Metric) -> Grid {
        self.x_axis
            .iter()
            .map(|&x| {
                self.d_axis
                    .iter()
                    .map(|&d| {
                        let vals: Vec<f64> = self
                            .cells_at(x, d)
                            .filter_map(|c| match &c.outcome {
                                CellOutcome::Ok { metrics } => metric.pick(metrics),
                                _ => None,
                            })
                            .collect();
                        if vals.is_empty() {
                            None
                        } else {
                            Some(vals.iter().sum::<f64>() / vals.len() as f64)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Divide by the baseline value.
    #[default]
    Baseline,
    /// Divide by the mean of both values, which makes the grid antisymmetric.
    Symmetric,
}

/// Percent by which `candidate` beats `baseline` per cell: positive means a
/// shorter time or a higher throughput.
pub fn percentage_diff_grid(
    candidate: &SweepResult,
    baseline: &SweepResult,
    metric: Metric,
    denominator: Denominator,
) -> Result<Grid> {
    if candidate.x_axis != baseline.x_axis || candidate.d_axis != baseline.d_axis {
        return Err(Error::Config(format!(
            "grids differ: {} vs {}",
            candidate.controller, baseline.controller
        )));
    }
    let a = candidate.metric_grid(metric);
    let b = baseline.metric_grid(metric);
    Ok(a.iter()
        .zip(&b)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(&ca, &cb)| {
                    let (ca, cb) = (ca?, cb?);
                    let denom = match denominator {
                        Denominator::Baseline => cb,
                        Denominator::Symmetric => 0.5 * (ca + cb),
                    };
                    if denom == 0.0 {
                        return if ca == cb { Some(0.0) } else { None };
                    }
                    let gain = if metric.higher_is_better() {
                        ca - cb
                    } else {
                        cb - ca
                    };
                    Some(100.0 * gain / denom)
                })
                .collect()
        })
        .collect())
}

/// Heatmap CSV: first column x_a, one column per d, blanks for missing cells.
pub fn write_grid_csv<W: Write>(grid: &Grid, x_axis: &[f64], d_axis: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x_a".to_string()];
    header.extend(d_axis.iter().map(|d| d.to_string()));
    w.write_record(&header)?;
    for (x, row) in x_axis.iter().zip(grid) {
        let mut rec = vec![x.to_string()];
        rec.extend(
            row.iter()
                .map(|c| c.map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
