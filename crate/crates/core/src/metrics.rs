//! Logged trajectories and the step-response indices computed from them.
//!
//! Definitions:
//! - SSE: mean `|signal - reference|` over the final `steady_fraction` of rows.
//! - Overshoot: largest excursion past the reference, in the approach
//!   direction, after the first crossing; 0 if the reference is never crossed.
//! - Response time: time after which the error stays inside a band of
//!   `band_fraction` times the initial step; the band entry is linearly
//!   interpolated between samples. A signal whose initial step is zero (pitch
//!   during a depth step) uses the band around its peak deviation instead.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub w: f64,
    pub q: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub z_ref: f64,
    /// Stage cost incurred on arrival at this row (0 on the first row).
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn validate(&self) -> Result<f64> {
        if self.rows.is_empty() {
            return Err(Error::Metrics("trajectory is empty".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            let vals = [
                r.t, r.x, r.z, r.theta, r.w, r.q, r.tau1, r.tau2, r.z_ref, r.cost,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Metrics(format!("row {i} has a non-finite value")));
            }
        }
        if self.rows.len() < 2 {
            return Ok(0.0);
        }
        let dt = self.rows[1].t - self.rows[0].t;
        if !(dt > 0.0) {
            return Err(Error::Metrics("time must be strictly increasing".into()));
        }
        for (i, pair) in self.rows.windows(2).enumerate() {
            let step = pair[1].t - pair[0].t;
            if (step - dt).abs() > 1e-9 * dt.max(pair[1].t.abs()) {
                return Err(Error::Metrics(format!(
                    "non-uniform time grid at row {}: step {step} vs {dt}",
                    i + 1
                )));
            }
        }
        Ok(dt)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                Error::MissingArtifact {
                    path: path.to_path_buf(),
                    hint: "no trajectory at this path".into(),
                }
            }
            _ => Error::Csv(e),
        })?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<TrajectoryRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub steady_fraction: f64,
    pub band_fraction: f64,
    pub gamma: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            steady_fraction: 0.2,
            band_fraction: 0.02,
            gamma: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sse_z: f64,
    pub sse_theta: f64,
    pub overshoot_z: f64,
    /// `None` when the signal never settles inside the band.
    pub rt_z: Option<f64>,
    pub rt_theta: Option<f64>,
    pub long_term_cost: f64,
}

/// Mean absolute error over the trailing `fraction` of samples.
pub fn steady_state_error(errors: &[f64], fraction: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let n = ((errors.len() as f64 * fraction).round() as usize).clamp(1, errors.len());
    errors[errors.len() - n..].iter().map(|e| e.abs()).sum::<f64>() / n as f64
}

/// Largest excursion past zero, opposite to the sign of the initial error,
/// after the error first reaches zero.
pub fn overshoot(errors: &[f64]) -> f64 {
    let Some(&e0) = errors.first() else {
        return 0.0;
    };
    if e0 == 0.0 {
        return 0.0;
    }
    let dir = -e0.signum();
    let Some(cross) = errors.iter().position(|e| e * dir >= 0.0) else {
        return 0.0;
    };
    errors[cross..]
        .iter()
        .map(|e| e * dir)
        .fold(0.0, f64::max)
}

/// Time from which `|error|` stays within `band`, with the final band entry
/// interpolated linearly. `None` if the last sample is still outside.
pub fn response_time(errors: &[f64], dt: f64, band: f64) -> Option<f64> {
    let last_out = errors.iter().rposition(|e| e.abs() > band)?;
    if last_out + 1 >= errors.len() {
        return None;
    }
    let a = errors[last_out].abs();
    let b = errors[last_out + 1].abs();
    let frac = if a > b { (a - band) / (a - b) } else { 1.0 };
    Some(dt * (last_out as f64 + frac))
}

fn response_time_or_zero(errors: &[f64], dt: f64, band: f64) -> Option<f64> {
    if errors.iter().all(|e| e.abs() <= band) {
        return Some(0.0);
    }
    response_time(errors, dt, band)
}

pub fn compute_metrics(traj: &TrajectoryRecord, cfg: &MetricsConfig) -> Result<MetricsReport> {
    let dt = traj.validate()?;
    let ez: Vec<f64> = traj.rows.iter().map(|r| r.z - r.z_ref).collect();
    let eth: Vec<f64> = traj.rows.iter().map(|r| r.theta).collect();

    let step_z = ez[0].abs();
    let band_z = if step_z > 0.0 {
        cfg.band_fraction * step_z
    } else {
        cfg.band_fraction * ez.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    };
    let peak_theta = eth.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let band_theta = if eth[0].abs() > 0.0 {
        cfg.band_fraction * eth[0].abs()
    } else {
        cfg.band_fraction * peak_theta
    };

    let mut g = 1.0;
    let mut j = 0.0;
    for r in &traj.rows[1..] {
        j += g * r.cost;
        g *= cfg.gamma;
    }

    Ok(MetricsReport {
        sse_z: steady_state_error(&ez, cfg.steady_fraction),
        sse_theta: steady_state_error(&eth, cfg.steady_fraction),
        overshoot_z: overshoot(&ez),
        rt_z: response_time_or_zero(&ez, dt, band_z),
        rt_theta: if peak_theta == 0.0 {
            Some(0.0)
        } else {
            response_time_or_zero(&eth, dt, band_theta)
        },
        long_term_cost: j,
    })
}
