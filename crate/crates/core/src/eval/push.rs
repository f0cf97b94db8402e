//! Push recovery: walk straight, take one push, count falls.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{Controller, Scenario};
use crate::env::vec_env::episode_seed;
use crate::env::{CommandVector, PushEvent};
use crate::error::EvalError;

/// Upper edges of the cumulative success-rate bins, N.
pub const SUCCESS_BIN_EDGES: [f64; 5] = [100.0, 150.0, 200.0, 250.0, 300.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushProtocol {
    pub n_trials: usize,
    pub force_range: [f64; 2],
    pub walk_speed: f64,
    pub push_duration_s: f64,
    pub push_window_s: [f64; 2],
    pub horizon_s: f64,
    pub seed: u64,
}

impl Default for PushProtocol {
    fn default() -> Self {
        Self {
            n_trials: 600,
            force_range: [50.0, 300.0],
            walk_speed: 0.3,
            push_duration_s: 0.1,
            push_window_s: [2.5, 3.5],
            horizon_s: 5.0,
            seed: 0,
        }
    }
}

impl PushProtocol {
    pub fn validate(&self) -> Result<(), EvalError> {
        let [lo, hi] = self.force_range;
        let [t0, t1] = self.push_window_s;
        if self.n_trials == 0 {
            return Err(EvalError::Invalid("at least one push trial is needed".into()));
        }
        if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
            return Err(EvalError::Invalid(format!("force range [{lo}, {hi}] is not an ordered non-negative interval")));
        }
        if !(0.0 <= t0 && t0 <= t1 && t1 + self.push_duration_s <= self.horizon_s && self.push_duration_s > 0.0) {
            return Err(EvalError::Invalid("push window must end before the horizon".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushTrial {
    pub magnitude: f64,
    /// World-frame push direction, rad in [0, 2π).
    pub azimuth: f64,
    pub start_s: f64,
    pub duration_s: f64,
    pub success: bool,
    pub seed: u64,
}

/// Draws trial `index`'s push parameters; the trial then runs on this seed.
pub fn draw_trial(protocol: &PushProtocol, index: usize) -> PushTrial {
    let seed = episode_seed(protocol.seed, index, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7075_7368);
    let [lo, hi] = protocol.force_range;
    let [t0, t1] = protocol.push_window_s;
    PushTrial {
        magnitude: if hi > lo { rng.random_range(lo..=hi) } else { lo },
        azimuth: rng.random_range(0.0..TAU),
        start_s: if t1 > t0 { rng.random_range(t0..=t1) } else { t0 },
        duration_s: protocol.push_duration_s,
        success: false,
        seed,
    }
}

/// Runs one drawn trial with randomization on; success iff no failure
/// termination before the horizon.
pub fn run_trial(scenario: &Scenario, controller: &dyn Controller, protocol: &PushProtocol, mut trial: PushTrial) -> Result<PushTrial, EvalError> {
    let mut env = scenario.env(trial.seed, true)?;
    env.set_command_override(Some(CommandVector::new(protocol.walk_speed, 0.0, 0.0)));
    let push = PushEvent::from_polar(trial.start_s, trial.duration_s, trial.magnitude, trial.azimuth);
    env.set_push_override(Some(vec![push]));
    let steps = (protocol.horizon_s / env.config().control_dt).round() as usize;
    trial.success = true;
    for _ in 0..steps {
        let obs = env.observe();
        if env.step(&controller.action(&obs))?.status.is_terminated() {
            trial.success = false;
            break;
        }
    }
    Ok(trial)
}

pub fn eval_push_recovery(scenario: &Scenario, controller: &dyn Controller, protocol: &PushProtocol) -> Result<Vec<PushTrial>, EvalError> {
    scenario.check(controller)?;
    protocol.validate()?;
    (0..protocol.n_trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, controller, protocol, draw_trial(protocol, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBin {
    /// Trials with magnitude strictly below this edge, N.
    pub below: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: Option<f64>,
}

/// Cumulative success rates below each edge.
pub fn success_bins(trials: &[PushTrial], edges: &[f64]) -> Vec<SuccessBin> {
    edges
        .iter()
        .map(|&below| {
            let inside: Vec<&PushTrial> = trials.iter().filter(|t| t.magnitude < below).collect();
            let successes = inside.iter().filter(|t| t.success).count();
            SuccessBin {
                below,
                trials: inside.len(),
                successes,
                rate: (!inside.is_empty()).then(|| successes as f64 / inside.len() as f64),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drawn_trials_respect_supports() {
        let p = PushProtocol::default();
        for i in 0..2000 {
            let t = draw_trial(&p, i);
            assert!((50.0..=300.0).contains(&t.magnitude));
            assert!((0.0..TAU).contains(&t.azimuth));
            assert!((2.5..=3.5).contains(&t.start_s));
            assert_eq!(t.duration_s, 0.1);
        }
        assert_eq!(draw_trial(&p, 3), draw_trial(&p, 3));
    }

    #[test]
    fn bins_are_cumulative() {
        let trial = |magnitude, success| PushTrial { magnitude, azimuth: 0.0, start_s: 3.0, duration_s: 0.1, success, seed: 0 };
        let trials = [trial(60.0, true), trial(120.0, false), trial(140.0, true), trial(290.0, false)];
        let bins = success_bins(&trials, &SUCCESS_BIN_EDGES);
        assert_eq!(bins.iter().map(|b| b.trials).collect::<Vec<_>>(), vec![1, 3, 3, 3, 4]);
        assert_eq!(bins[1].rate, Some(2.0 / 3.0));
        assert_eq!(bins[4].rate, Some(0.5));
        assert_eq!(success_bins(&[], &SUCCESS_BIN_EDGES)[0].rate, None);
    }
}
