//! Cost of transport `P / (m·g·v)` from positive mechanical power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{Controller, Scenario};
use crate::env::vec_env::episode_seed;
use crate::env::CommandVector;
use crate::error::EvalError;

pub const MIN_SPEED: f64 = 0.05;
pub const MIN_DURATION_S: f64 = 1.0;

/// One logged instant of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotSample {
    /// `Σ max(0, τᵢ·q̇ᵢ)`, W.
    pub positive_power: f64,
    /// Planar base speed, m/s.
    pub planar_speed: f64,
}

/// Time means over uniformly spaced samples `dt` apart.
pub fn compute_cot(samples: &[CotSample], dt: f64, total_mass: f64, gravity: f64) -> Result<f64, EvalError> {
    let duration = samples.len() as f64 * dt;
    if duration < MIN_DURATION_S - 1e-9 {
        return Err(EvalError::TrajectoryTooShort(duration));
    }
    let n = samples.len() as f64;
    let power = samples.iter().map(|s| s.positive_power).sum::<f64>() / n;
    let speed = samples.iter().map(|s| s.planar_speed).sum::<f64>() / n;
    if speed < MIN_SPEED {
        return Err(EvalError::SpeedTooLow(speed));
    }
    Ok(power / (total_mass * gravity * speed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CotProtocol {
    pub speeds: Vec<f64>,
    pub duration_s: f64,
    /// Initial seconds excluded while the gait starts up.
    pub warmup_s: f64,
    pub seed: u64,
}

impl Default for CotProtocol {
    fn default() -> Self {
        Self { speeds: vec![0.5, 0.8, 1.0], duration_s: 10.0, warmup_s: 2.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotRow {
    pub speed: f64,
    /// `None` when the walk fell or was too slow to define it.
    pub cot: Option<f64>,
    pub mean_power: f64,
    pub mean_speed: f64,
    pub fell: bool,
}

pub fn eval_cot(scenario: &Scenario, controller: &dyn Controller, protocol: &CotProtocol) -> Result<Vec<CotRow>, EvalError> {
    scenario.check(controller)?;
    if protocol.duration_s - protocol.warmup_s < MIN_DURATION_S {
        return Err(EvalError::Invalid("CoT window after warm-up is shorter than 1 s".into()));
    }
    protocol
        .speeds
        .par_iter()
        .enumerate()
        .map(|(i, &speed)| {
            let mut env = scenario.env(episode_seed(protocol.seed, i, 0), false)?;
            env.set_command_override(Some(CommandVector::new(speed, 0.0, 0.0)));
            env.set_push_override(Some(Vec::new()));
            let dt = env.config().control_dt;
            let steps = (protocol.duration_s / dt).round() as usize;
            let warmup = (protocol.warmup_s / dt).round() as usize;
            let mut samples = Vec::with_capacity(steps);
            let mut fell = false;
            for k in 0..steps {
                let obs = env.observe();
                let info = env.step(&controller.action(&obs))?;
                if info.status.is_terminated() {
                    fell = true;
                    break;
                }
                if k >= warmup {
                    let v = env.state().base_linear_velocity;
                    samples.push(CotSample { positive_power: info.positive_power, planar_speed: v.x.hypot(v.y) });
                }
            }
            let n = samples.len().max(1) as f64;
            let mean_power = samples.iter().map(|s| s.positive_power).sum::<f64>() / n;
            let mean_speed = samples.iter().map(|s| s.planar_speed).sum::<f64>() / n;
            let cot = if fell {
                None
            } else {
                compute_cot(&samples, dt, env.tree().total_mass(), env.tree().gravity.norm()).ok()
            };
            Ok(CotRow { speed, cot, mean_power, mean_speed, fell })
        })
        .collect()
}
