//! Rollout collection over a vectorized environment alternating with PPO
//! updates.

use std::collections::VecDeque;
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::buffer::{compute_gae, normalize_advantages, RolloutBuffer, Sample};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::policy::{columns, PolicyParameters};
use super::update::{ppo_update, TrainingBatch, UpdateStats};
use crate::actuation::StiffnessGrouping;
use crate::env::reward::NUM_TERMS;
use crate::env::vec_env::splitmix64;
use crate::env::{EnvConfig, EpisodeStatus, EpisodeSummary, RewardTerm, VecEnv};
use crate::error::TrainError;
use crate::physics::{joint_index, KinematicTree, JOINTS_PER_LEG, JOINT_GROUP_NAMES, NUM_LEGS};

/// Finished episodes averaged into the episode metrics.
pub const EPISODE_WINDOW: usize = 100;

pub const METRICS_FILE: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "policy_final.vstk";

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub env_steps: usize,
    pub episodes_finished: usize,
    /// Mean return of the last [`EPISODE_WINDOW`] finished episodes; `None`
    /// until the first episode ends.
    pub mean_episode_return: Option<f64>,
    pub mean_episode_length: Option<f64>,
    /// Mean per-step total reward over the rollout.
    pub mean_step_reward: f64,
    /// Mean weighted per-step contribution of each reward term.
    pub term_means: [f64; NUM_TERMS],
    /// Mean stiffness of hip, thigh and knee joints over the rollout.
    pub mean_kp: [f64; JOINTS_PER_LEG],
    pub update: UpdateStats,
    pub action_std: f64,
}

impl IterationMetrics {
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = [
            "iteration",
            "env_steps",
            "episodes_finished",
            "mean_episode_return",
            "mean_episode_length",
            "mean_step_reward",
        ]
        .map(String::from)
        .to_vec();
        h.extend(RewardTerm::ALL.iter().map(|t| format!("reward_{}", t.name())));
        h.extend(JOINT_GROUP_NAMES.iter().map(|g| format!("kp_{g}")));
        h.extend(
            ["policy_loss", "value_loss", "entropy", "approx_kl", "clip_fraction", "grad_norm", "action_std"]
                .map(String::from),
        );
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let mut r = vec![
            self.iteration.to_string(),
            self.env_steps.to_string(),
            self.episodes_finished.to_string(),
            opt(self.mean_episode_return),
            opt(self.mean_episode_length),
            self.mean_step_reward.to_string(),
        ];
        r.extend(self.term_means.iter().map(f64::to_string));
        r.extend(self.mean_kp.iter().map(f64::to_string));
        let u = &self.update;
        r.extend(
            [u.policy_loss, u.value_loss, u.entropy, u.approx_kl, u.clip_fraction, u.grad_norm, self.action_std]
                .iter()
                .map(f64::to_string),
        );
        r
    }

    /// Every logged number is finite.
    pub fn is_finite(&self) -> bool {
        let u = &self.update;
        self.mean_episode_return.is_none_or(f64::is_finite)
            && self.mean_episode_length.is_none_or(f64::is_finite)
            && self.mean_step_reward.is_finite()
            && self.term_means.iter().chain(&self.mean_kp).all(|v| v.is_finite())
            && [u.policy_loss, u.value_loss, u.entropy, u.approx_kl, u.clip_fraction, u.grad_norm, self.action_std]
                .iter()
                .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParameters,
    pub metrics: Vec<IterationMetrics>,
    pub checkpoints: Vec<PathBuf>,
}

struct Rollout {
    buffer: RolloutBuffer,
    raw_observations: Vec<Vec<f64>>,
    raw_privileged: Vec<Vec<f64>>,
    finished: Vec<EpisodeSummary>,
    reward_sum: f64,
    term_sums: [f64; NUM_TERMS],
    kp_sums: [f64; JOINTS_PER_LEG],
}

/// Trains a policy for `grouping`. With `output_dir`, streams `metrics.csv`
/// and writes checkpoints every `checkpoint_every` iterations plus a final
/// one. `progress` sees each iteration's metrics.
pub fn train(
    tree: &KinematicTree,
    grouping: StiffnessGrouping,
    env_config: &EnvConfig,
    config: &TrainConfig,
    output_dir: Option<&Path>,
    mut progress: impl FnMut(&IterationMetrics),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.seed ^ 0x7070_6f5f_7472_6169));
    let mut envs = VecEnv::new(tree, grouping, env_config, config.n_envs, config.seed)?;
    let first = &envs.envs()[0];
    let mut params = PolicyParameters::new(
        first.observation_dim(),
        first.privileged_dim(),
        first.action_dim(),
        &config.actor_hidden,
        &config.critic_hidden,
        config.init_std,
        config.obs_clip,
        &mut rng,
    );
    let mut optimizer = Adam::new(config.learning_rate, &params.tensor_sizes());

    let mut metrics_writer = match output_dir {
        Some(dir) => {
            let path = dir.join(METRICS_FILE);
            let file = File::create(&path).map_err(|source| TrainError::Metrics { path: path.clone(), source })?;
            let mut w = csv::Writer::from_writer(file);
            w.write_record(IterationMetrics::csv_header()).map_err(|e| metrics_error(&path, e))?;
            Some((w, path))
        }
        None => None,
    };

    let mut observations = envs.observe();
    let mut privileged = envs.observe_privileged();
    let mut window: VecDeque<EpisodeSummary> = VecDeque::with_capacity(EPISODE_WINDOW);
    let mut outcome = TrainOutcome { params: params.clone(), metrics: Vec::new(), checkpoints: Vec::new() };
    for iteration in 0..config.n_iterations {
        let rollout = collect(&mut envs, &params, config, &mut observations, &mut privileged, &mut rng)?;
        let (mut advantages, returns) = compute_gae(&rollout.buffer, config.gamma, config.lambda);
        normalize_advantages(&mut advantages);
        let RolloutBuffer { observations: obs, privileged: priv_, actions, log_probs, .. } = rollout.buffer;
        let batch = TrainingBatch { observations: obs, privileged: priv_, actions, log_probs, advantages, returns };
        let update = ppo_update(&mut params, &mut optimizer, &batch, config, &mut rng)?;
        params.obs_normalizer.update(&rollout.raw_observations);
        params.privileged_normalizer.update(&rollout.raw_privileged);

        for s in rollout.finished.iter() {
            if window.len() == EPISODE_WINDOW {
                window.pop_front();
            }
            window.push_back(*s);
        }
        let samples = (config.n_envs * config.steps_per_rollout) as f64;
        let per_env_joints = (config.n_envs * config.steps_per_rollout * NUM_LEGS) as f64;
        let m = IterationMetrics {
            iteration,
            env_steps: (iteration + 1) * config.n_envs * config.steps_per_rollout,
            episodes_finished: rollout.finished.len(),
            mean_episode_return: mean(window.iter().map(|s| s.episode_return)),
            mean_episode_length: mean(window.iter().map(|s| s.length as f64)),
            mean_step_reward: rollout.reward_sum / samples,
            term_means: rollout.term_sums.map(|s| s / samples),
            mean_kp: rollout.kp_sums.map(|s| s / per_env_joints),
            update,
            action_std: params.log_std.iter().map(|l| l.exp()).sum::<f64>() / params.action_dim() as f64,
        };
        if let Some((w, path)) = metrics_writer.as_mut() {
            w.write_record(m.csv_record()).map_err(|e| metrics_error(path, e))?;
            w.flush().map_err(|source| TrainError::Metrics { path: path.clone(), source })?;
        }
        progress(&m);
        outcome.metrics.push(m);

        if let Some(dir) = output_dir {
            let last = iteration + 1 == config.n_iterations;
            let periodic = config.checkpoint_every > 0 && (iteration + 1) % config.checkpoint_every == 0;
            if periodic || last {
                let checkpoint = Checkpoint {
                    grouping,
                    iteration: iteration + 1,
                    params: params.clone(),
                    train_config: config.clone(),
                    env_config: env_config.clone(),
                };
                if periodic {
                    let path = dir.join(format!("policy_{:05}.vstk", iteration + 1));
                    checkpoint.save(&path)?;
                    outcome.checkpoints.push(path);
                }
                if last {
                    let path = dir.join(FINAL_CHECKPOINT);
                    checkpoint.save(&path)?;
                    outcome.checkpoints.push(path);
                }
            }
        }
    }
    outcome.params = params;
    Ok(outcome)
}

fn collect(
    envs: &mut VecEnv,
    params: &PolicyParameters,
    config: &TrainConfig,
    observations: &mut Vec<Vec<f64>>,
    privileged: &mut Vec<Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout, TrainError> {
    let (n, steps) = (config.n_envs, config.steps_per_rollout);
    let mut r = Rollout {
        buffer: RolloutBuffer::new(steps, n),
        raw_observations: Vec::with_capacity(n * steps),
        raw_privileged: Vec::with_capacity(n * steps),
        finished: Vec::new(),
        reward_sum: 0.0,
        term_sums: [0.0; NUM_TERMS],
        kp_sums: [0.0; JOINTS_PER_LEG],
    };
    for _ in 0..steps {
        let obs_n: Vec<Vec<f64>> = observations.iter().map(|o| params.obs_normalizer.normalize(o)).collect();
        let priv_n: Vec<Vec<f64>> = privileged.iter().map(|p| params.privileged_normalizer.normalize(p)).collect();
        let means = params.actor.forward(&columns(&obs_n));
        let values = params.values(&columns(&priv_n));
        let (actions, log_probs) = params.sample(&means, rng);
        let clamped: Vec<Vec<f64>> =
            actions.iter().map(|a| a.iter().map(|v| v.clamp(-1.0, 1.0)).collect()).collect();
        let transitions = envs.step(&clamped)?;

        let samples = obs_n.into_iter().zip(priv_n).zip(actions).zip(log_probs).zip(values);
        for (((((observation, privileged_n), action), log_prob), value), tr) in samples.zip(&transitions) {
            let truncated = tr.info.status == EpisodeStatus::Truncated;
            let bootstrap = match (&tr.terminal_privileged, truncated) {
                (Some(terminal), true) => params.value(terminal),
                _ => 0.0,
            };
            r.buffer.push(Sample {
                observation,
                privileged: privileged_n,
                action,
                log_prob,
                reward: tr.info.reward.total,
                value,
                terminated: tr.info.status.is_terminated(),
                truncated,
                bootstrap,
            });
            r.reward_sum += tr.info.reward.total;
            for (sum, w) in r.term_sums.iter_mut().zip(&tr.info.reward.weighted) {
                *sum += w;
            }
            for (group, sum) in r.kp_sums.iter_mut().enumerate() {
                *sum += (0..NUM_LEGS).map(|leg| tr.info.gains.kp[joint_index(leg, group)]).sum::<f64>();
            }
            if let Some(summary) = tr.finished {
                r.finished.push(summary);
            }
        }
        r.raw_observations.append(observations);
        r.raw_privileged.append(privileged);
        for tr in transitions {
            observations.push(tr.observation);
            privileged.push(tr.privileged);
        }
    }
    let priv_n: Vec<Vec<f64>> = privileged.iter().map(|p| params.privileged_normalizer.normalize(p)).collect();
    r.buffer.last_values = params.values(&columns(&priv_n));
    Ok(r)
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

fn metrics_error(path: &Path, e: csv::Error) -> TrainError {
    TrainError::Metrics { path: path.to_path_buf(), source: std::io::Error::other(e) }
}
