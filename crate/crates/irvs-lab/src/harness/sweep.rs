use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::config::{Algorithm, ExperimentConfig};
use super::experiment::{
    append_metrics, evaluate_trained, make_dataset, run_experiment, save_trained,
    train_algorithm, MetricsRow,
};
use crate::error::{Error, Result};

/// Sweep axis. eta_inv and epsilon only change inference, so those
/// sweeps train once per seed and reuse the artifact across values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    EtaInv,
    Epsilon,
    Dim,
    Delta,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::EtaInv => "eta_inv",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Dim => "dim",
            SweepAxis::Delta => "delta",
        };
        f.write_str(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta_inv" => Ok(SweepAxis::EtaInv),
            "epsilon" => Ok(SweepAxis::Epsilon),
            "dim" | "D" => Ok(SweepAxis::Dim),
            "delta" => Ok(SweepAxis::Delta),
            other => Err(Error::argument(format!(
                "unknown sweep axis '{other}' (expected eta_inv|epsilon|dim|delta)"
            ))),
        }
    }
}

/// One sweep cell outcome; failed cells carry the error message so a
/// bad cell does not abort the rest of the grid.
#[derive(Debug)]
pub struct SweepCell {
    pub axis: SweepAxis,
    pub value: f64,
    pub rows: Vec<MetricsRow>,
    pub error: Option<String>,
}

fn apply_axis(cfg: &mut ExperimentConfig, axis: SweepAxis, value: f64) -> Result<()> {
    match axis {
        SweepAxis::EtaInv => cfg.eta_inv = value,
        SweepAxis::Epsilon => cfg.test_epsilon = value,
        SweepAxis::Dim => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::argument(format!("dim value {value} is not a positive integer")));
            }
            cfg.dim = value as usize;
        }
        SweepAxis::Delta => cfg.delta = Some(value),
    }
    Ok(())
}

/// Run the sweep; appends all successful rows to the base output dir's
/// metrics.csv and returns per-cell outcomes. Results per cell depend
/// only on (config, value), not on grid position.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepCell>> {
    base.validate()?;
    if values.is_empty() {
        return Err(Error::argument("sweep needs at least one value"));
    }
    let out = base.resolved_out_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io("output dir", e))?;
    let reuse_training = matches!(axis, SweepAxis::EtaInv | SweepAxis::Epsilon)
        && base.algorithm != Algorithm::Bc;
    let mut cells = Vec::with_capacity(values.len());

    if reuse_training {
        // Train once per seed, then evaluate at each axis value.
        let mut trained = Vec::new();
        for &seed in &base.seeds {
            let t0 = Instant::now();
            let data = make_dataset(base, seed)?;
            let model = train_algorithm(base, &data, seed)?;
            save_trained(&model, &out, seed)?;
            let wall = if base.record_wall_time {
                t0.elapsed().as_secs_f64()
            } else {
                0.0
            };
            trained.push((seed, data, model, wall));
        }
        for &value in values {
            let mut cfg = base.clone();
            let cell = match apply_axis(&mut cfg, axis, value) {
                Err(e) => SweepCell {
                    axis,
                    value,
                    rows: Vec::new(),
                    error: Some(e.to_string()),
                },
                Ok(()) => {
                    let mut rows = Vec::new();
                    let mut err = None;
                    for (seed, data, model, wall) in &trained {
                        match evaluate_trained(&cfg, model, data, *seed, *wall) {
                            Ok(mut r) => rows.append(&mut r),
                            Err(e) => {
                                err = Some(e.to_string());
                                break;
                            }
                        }
                    }
                    SweepCell {
                        axis,
                        value,
                        rows,
                        error: err,
                    }
                }
            };
            cells.push(cell);
        }
        let all: Vec<MetricsRow> = cells.iter().flat_map(|c| c.rows.clone()).collect();
        append_metrics(&out.join("metrics.csv"), &all)?;
    } else {
        for &value in values {
            let mut cfg = base.clone();
            let cell = match apply_axis(&mut cfg, axis, value) {
                Err(e) => SweepCell {
                    axis,
                    value,
                    rows: Vec::new(),
                    error: Some(e.to_string()),
                },
                Ok(()) => match run_experiment(&cfg) {
                    Ok(rows) => SweepCell {
                        axis,
                        value,
                        rows,
                        error: None,
                    },
                    Err(e) => SweepCell {
                        axis,
                        value,
                        rows: Vec::new(),
                        error: Some(e.to_string()),
                    },
                },
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}
