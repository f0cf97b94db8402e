//! Velocity tracking over a grid of speeds and headings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{local_planar_velocity, Controller, Scenario};
use crate::env::vec_env::episode_seed;
use crate::env::CommandVector;
use crate::error::EvalError;

pub const DEFAULT_SPEEDS: [f64; 3] = [0.5, 0.8, 1.0];

/// 0°, 45°, …, 315°.
pub fn default_headings_deg() -> Vec<f64> {
    (0..8).map(|k| 45.0 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub speeds: Vec<f64>,
    pub headings_deg: Vec<f64>,
    /// Seconds each command is held.
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self { speeds: DEFAULT_SPEEDS.to_vec(), headings_deg: default_headings_deg(), duration_s: 8.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingCell {
    pub speed: f64,
    pub heading_deg: f64,
    /// Time-mean planar error norm up to the end of the segment (or the fall).
    pub error: f64,
    pub fell: bool,
    /// Seconds driven before the segment ended.
    pub time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub speed: f64,
    /// Mean over cells without a fall; `None` if every cell fell.
    pub mean_error: Option<f64>,
    pub falls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub cells: Vec<TrackingCell>,
    pub per_speed: Vec<SpeedSummary>,
}

impl TrackingReport {
    pub fn from_cells(cells: Vec<TrackingCell>) -> Self {
        let mut speeds: Vec<f64> = Vec::new();
        for c in &cells {
            if !speeds.contains(&c.speed) {
                speeds.push(c.speed);
            }
        }
        let per_speed = speeds
            .into_iter()
            .map(|speed| {
                let of_speed: Vec<&TrackingCell> = cells.iter().filter(|c| c.speed == speed).collect();
                let standing: Vec<f64> = of_speed.iter().filter(|c| !c.fell).map(|c| c.error).collect();
                SpeedSummary {
                    speed,
                    mean_error: (!standing.is_empty()).then(|| standing.iter().sum::<f64>() / standing.len() as f64),
                    falls: of_speed.len() - standing.len(),
                }
            })
            .collect();
        Self { cells, per_speed }
    }
}

/// Mean over samples of `|v_cmd − v|`.
pub fn mean_tracking_error(samples: &[([f64; 2], [f64; 2])]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|(c, v)| ((c[0] - v[0]).powi(2) + (c[1] - v[1]).powi(2)).sqrt()).sum::<f64>() / samples.len() as f64
}

/// Drives one command for `duration_s` with randomization, noise and
/// pushes off; returns the cell.
pub fn track_segment(
    scenario: &Scenario,
    controller: &dyn Controller,
    command: CommandVector,
    duration_s: f64,
    seed: u64,
) -> Result<TrackingCell, EvalError> {
    let mut env = scenario.env(seed, false)?;
    env.set_command_override(Some(command));
    env.set_push_override(Some(Vec::new()));
    let steps = (duration_s / env.config().control_dt).round() as usize;
    let mut samples = Vec::with_capacity(steps);
    let mut fell = false;
    for _ in 0..steps {
        let obs = env.observe();
        let info = env.step(&controller.action(&obs))?;
        samples.push((command.v_xy, local_planar_velocity(&env)));
        if info.status.is_terminated() {
            fell = true;
            break;
        }
    }
    Ok(TrackingCell {
        speed: command.planar_speed(),
        heading_deg: command.v_xy[1].atan2(command.v_xy[0]).to_degrees().rem_euclid(360.0),
        error: mean_tracking_error(&samples),
        fell,
        time_s: samples.len() as f64 * env.config().control_dt,
    })
}

/// Every (speed, heading) cell, run in parallel.
pub fn eval_tracking(scenario: &Scenario, controller: &dyn Controller, config: &TrackingConfig) -> Result<TrackingReport, EvalError> {
    scenario.check(controller)?;
    let grid: Vec<(f64, f64)> =
        config.speeds.iter().flat_map(|&s| config.headings_deg.iter().map(move |&h| (s, h))).collect();
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(speed, heading))| {
            let command = CommandVector::heading(speed, heading.to_radians());
            let mut cell = track_segment(scenario, controller, command, config.duration_s, episode_seed(config.seed, i, 0))?;
            // Exact grid labels rather than values recovered from the vector.
            cell.speed = speed;
            cell.heading_deg = heading;
            Ok(cell)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(TrackingReport::from_cells(cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_tracking_has_zero_error() {
        let samples: Vec<_> = (0..10).map(|k| ([0.3 * k as f64, -0.1], [0.3 * k as f64, -0.1])).collect();
        assert_eq!(mean_tracking_error(&samples), 0.0);
    }

    #[test]
    fn error_is_planar_norm() {
        assert!((mean_tracking_error(&[([0.3, 0.4], [0.0, 0.0])]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn aggregation_excludes_falls() {
        let cell = |speed, error, fell| TrackingCell { speed, heading_deg: 0.0, error, fell, time_s: 1.0 };
        let r = TrackingReport::from_cells(vec![cell(0.5, 0.1, false), cell(0.5, 0.3, false), cell(0.5, 9.0, true), cell(1.0, 1.0, true)]);
        assert_eq!(r.per_speed.len(), 2);
        assert!((r.per_speed[0].mean_error.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!((r.per_speed[0].falls, r.per_speed[1].mean_error), (1, None));
    }
}
