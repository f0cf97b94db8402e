//! Seeded closed-loop rollout logged at the control rate.

use std::io::Write;

use super::controller::{Controller, Scenario};
use crate::env::{episode_seed, TerminationReason, EpisodeStatus, TrajectoryLogger};
use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplaySummary {
    pub rows: usize,
    pub episodes: usize,
    /// The rollout stopped early because the simulation diverged.
    pub diverged: bool,
}

/// Runs `controller` without randomization for `duration_s`, one CSV row per
/// control step. A fall starts a fresh episode seeded from `seed`; a
/// divergence ends the log with its diagnostic row.
pub fn replay<W: Write>(
    scenario: &Scenario,
    controller: &dyn Controller,
    seed: u64,
    duration_s: f64,
    out: W,
) -> Result<ReplaySummary, EvalError> {
    scenario.check(controller)?;
    if !(duration_s > 0.0) {
        return Err(EvalError::Invalid(format!("replay duration must be positive, got {duration_s}")));
    }
    let mut env = scenario.env(episode_seed(seed, 0, 0), false)?;
    let steps = (duration_s / env.config().control_dt).round() as usize;
    let csv_err = |e: csv::Error| EvalError::Invalid(format!("writing trajectory: {e}"));
    let mut log = TrajectoryLogger::new(out, controller.action_dim()).map_err(csv_err)?;
    let mut summary = ReplaySummary { rows: 0, episodes: 1, diverged: false };
    for _ in 0..steps {
        let action = controller.action(&env.observe());
        let info = env.step(&action)?;
        log.log(env.state(), &action, &info).map_err(csv_err)?;
        summary.rows += 1;
        match info.status {
            EpisodeStatus::Terminated(TerminationReason::Divergence) => {
                summary.diverged = true;
                break;
            }
            EpisodeStatus::Running => {}
            _ => {
                env.reset(episode_seed(seed, 0, summary.episodes as u64))?;
                summary.episodes += 1;
            }
        }
    }
    log.flush().map_err(|e| EvalError::Invalid(format!("writing trajectory: {e}")))?;
    Ok(summary)
}
