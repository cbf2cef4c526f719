//! Side-by-side comparison of pipeline runs over the same scenario.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;

#[derive(Debug)]
pub enum Error {
    TooFewRuns(usize),
    ScenarioMismatch { expected: String, got: String, pipeline: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TooFewRuns(n) => write!(f, "need at least 2 runs to compare, got {n}"),
            Error::ScenarioMismatch { expected, got, pipeline } => write!(
                f,
                "run `{pipeline}` was computed on scenario {got}, expected {expected}"
            ),
        }
    }
}

impl std::error::Error for Error {}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub pipeline: String,
    pub failed: bool,
    pub camera_rmse_t: Option<f64>,
    pub mean_object_rmse_t: Option<f64>,
    pub total_tracking_events: usize,
    pub winner: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario_digest: String,
    pub rows: Vec<CompareRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Rank runs of the same scenario. Failed runs render `-` and never win;
/// among the rest the lowest camera RMSE (then object RMSE) wins, with ties
/// shared.
pub fn compare_runs(reports: &[MetricsReport]) -> Result<Comparison, Error> {
    if reports.len() < 2 {
        return Err(Error::TooFewRuns(reports.len()));
    }
    let digest = reports[0].scenario_digest.clone();
    for r in reports {
        if r.scenario_digest != digest {
            return Err(Error::ScenarioMismatch {
                expected: digest,
                got: r.scenario_digest.clone(),
                pipeline: r.pipeline.clone(),
            });
        }
    }

    let mut rows: Vec<CompareRow> = reports
        .iter()
        .map(|r| CompareRow {
            pipeline: r.pipeline.clone(),
            failed: r.failed.is_some(),
            camera_rmse_t: r.camera_rmse_t,
            mean_object_rmse_t: mean(r.object_rmse_t.values().copied()),
            total_tracking_events: r.tracking_events.values().sum(),
            winner: false,
        })
        .collect();

    let key = |row: &CompareRow| -> Option<(f64, f64)> {
        if row.failed {
            return None;
        }
        Some((
            row.camera_rmse_t.unwrap_or(f64::INFINITY),
            row.mean_object_rmse_t.unwrap_or(f64::INFINITY),
        ))
    };
    let best = rows.iter().filter_map(key).min_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(best) = best {
        for row in &mut rows {
            if key(row) == Some(best) {
                row.winner = true;
            }
        }
    }
    Ok(Comparison { scenario_digest: digest, rows })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "pipeline,camera_rmse_t,mean_object_rmse_t,tracking_events,failed,winner\n",
        );
        for row in &self.rows {
            let fmt_opt = |v: Option<f64>, failed: bool| {
                if failed {
                    "-".to_string()
                } else {
                    v.map_or("-".into(), |x| format!("{x:.6}"))
                }
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.pipeline,
                fmt_opt(row.camera_rmse_t, row.failed),
                fmt_opt(row.mean_object_rmse_t, row.failed),
                row.total_tracking_events,
                row.failed,
                row.winner
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("scenario {}\n", self.scenario_digest);
        out.push_str(&format!(
            "{:<10} {:>14} {:>18} {:>10} {:>7}\n",
            "pipeline", "cam RMSE [m]", "obj RMSE [m]", "objects", "result"
        ));
        for row in &self.rows {
            let cam = if row.failed {
                "-".to_string()
            } else {
                row.camera_rmse_t.map_or("-".into(), |v| format!("{v:.4}"))
            };
            let obj = if row.failed {
                "-".to_string()
            } else {
                row.mean_object_rmse_t.map_or("-".into(), |v| format!("{v:.4}"))
            };
            let mark = if row.failed {
                "failed"
            } else if row.winner {
                "best"
            } else {
                ""
            };
            out.push_str(&format!(
                "{:<10} {:>14} {:>18} {:>10} {:>7}\n",
                row.pipeline, cam, obj, row.total_tracking_events, mark
            ));
        }
        out
    }
}
