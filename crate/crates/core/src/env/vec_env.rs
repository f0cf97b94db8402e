//! A batch of independent environments stepped in parallel.

use rayon::prelude::*;

use super::config::EnvConfig;
use super::episode::{Env, StepInfo};
use super::termination::EpisodeStatus;
use crate::actuation::StiffnessGrouping;
use crate::error::{ActuationError, PhysicsError};
use crate::physics::KinematicTree;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of episode `episode` of environment `env` in a run seeded `base`.
pub fn episode_seed(base: u64, env: usize, episode: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(env as u64)).wrapping_add(episode))
}

/// A finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode_return: f64,
    pub length: usize,
    pub status: EpisodeStatus,
}

/// One environment's transition. When the episode ended, `observation` and
/// `privileged` already belong to the next episode and `terminal_privileged`
/// holds the critic input of the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvTransition {
    pub info: StepInfo,
    pub observation: Vec<f64>,
    pub privileged: Vec<f64>,
    pub terminal_privileged: Option<Vec<f64>>,
    pub finished: Option<EpisodeSummary>,
}

#[derive(Debug, Clone)]
pub struct VecEnv {
    envs: Vec<Env>,
    episodes: Vec<u64>,
    base_seed: u64,
}

impl VecEnv {
    pub fn new(
        tree: &KinematicTree,
        grouping: StiffnessGrouping,
        config: &EnvConfig,
        n_envs: usize,
        base_seed: u64,
    ) -> Result<Self, PhysicsError> {
        let envs = (0..n_envs)
            .map(|i| Env::new(tree.clone(), grouping, config.clone(), episode_seed(base_seed, i, 0)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { envs, episodes: vec![0; n_envs], base_seed })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[Env] {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut [Env] {
        &mut self.envs
    }

    /// Current actor observations.
    pub fn observe(&mut self) -> Vec<Vec<f64>> {
        self.envs.par_iter_mut().map(|e| e.observe()).collect()
    }

    pub fn observe_privileged(&self) -> Vec<Vec<f64>> {
        self.envs.par_iter().map(|e| e.observe_privileged()).collect()
    }

    /// Steps every environment with its action, resetting finished ones.
    pub fn step(&mut self, actions: &[Vec<f64>]) -> Result<Vec<EnvTransition>, ActuationError> {
        assert_eq!(actions.len(), self.envs.len(), "one action per environment");
        let base = self.base_seed;
        self.envs
            .par_iter_mut()
            .zip(self.episodes.par_iter_mut())
            .zip(actions.par_iter())
            .enumerate()
            .map(|(i, ((env, episode), action))| {
                let info = env.step(action)?;
                let (terminal_privileged, finished) = if info.status.is_done() {
                    let summary = EpisodeSummary {
                        episode_return: env.context().episode_return,
                        length: env.context().step_count,
                        status: info.status,
                    };
                    let terminal = env.observe_privileged();
                    *episode += 1;
                    // A reset only fails for invalid masses, which the
                    // validated randomization ranges rule out.
                    env.reset(episode_seed(base, i, *episode)).expect("reset of a validated environment");
                    (Some(terminal), Some(summary))
                } else {
                    (None, None)
                };
                Ok(EnvTransition {
                    info,
                    observation: env.observe(),
                    privileged: env.observe_privileged(),
                    terminal_privileged,
                    finished,
                })
            })
            .collect()
    }
}
