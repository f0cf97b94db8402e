//! Clipped-surrogate PPO update with value loss and entropy bonus.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::{clip_grad_norm, Adam};
use super::config::TrainConfig;
use super::policy::{columns, PolicyParameters};
use crate::error::TrainError;

/// Flattened training samples. Advantages are expected normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub observations: Vec<Vec<f64>>,
    pub privileged: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }
}

/// Means over all minibatches of the update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// `E[(r − 1) − ln r]`, a non-negative KL(old‖new) estimate.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Terms PPO needs with the parameters as they are.
struct Evaluation {
    policy_loss: f64,
    value_loss: f64,
    approx_kl: f64,
    clip_fraction: f64,
    grads: Vec<Vec<f64>>,
}

/// Probability ratios `π_new(a|o) / π_old(a|o)` over the whole batch.
pub fn probability_ratios(params: &PolicyParameters, batch: &TrainingBatch) -> Vec<f64> {
    let means = params.actor.forward(&columns(&batch.observations));
    means
        .column_iter()
        .enumerate()
        .map(|(j, mean)| (params.log_prob(mean.as_slice(), &batch.actions[j]) - batch.log_probs[j]).exp())
        .collect()
}

fn evaluate(params: &PolicyParameters, batch: &TrainingBatch, idx: &[usize], config: &TrainConfig) -> Evaluation {
    let b = idx.len() as f64;
    let pick = |rows: &[Vec<f64>]| columns(&idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>());
    let (means, actor_cache) = params.actor.forward_cached(&pick(&batch.observations));
    let (values, critic_cache) = params.critic.forward_cached(&pick(&batch.privileged));
    let inv_var: Vec<f64> = params.log_std.iter().map(|l| (-2.0 * l).exp()).collect();
    let eps = config.clip_ratio;

    let mut d_mean = DMatrix::zeros(means.nrows(), means.ncols());
    let mut d_log_std = vec![-config.entropy_coef; params.action_dim()];
    let (mut policy_loss, mut approx_kl, mut clipped) = (0.0, 0.0, 0.0);
    for (j, &i) in idx.iter().enumerate() {
        let mean = means.column(j);
        let action = &batch.actions[i];
        let log_ratio = params.log_prob(mean.as_slice(), action) - batch.log_probs[i];
        let ratio = log_ratio.exp();
        let adv = batch.advantages[i];
        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        policy_loss -= unclipped.min(clipped_term) / b;
        approx_kl += ((ratio - 1.0) - log_ratio) / b;
        if (ratio - 1.0).abs() > eps {
            clipped += 1.0 / b;
        }
        // ∂loss/∂log π; zero where the clipped branch is the active minimum.
        let g = if unclipped <= clipped_term { -unclipped / b } else { 0.0 };
        if g != 0.0 {
            for k in 0..action.len() {
                let diff = action[k] - mean[k];
                d_mean[(k, j)] = g * diff * inv_var[k];
                d_log_std[k] += g * (diff * diff * inv_var[k] - 1.0);
            }
        }
    }

    let mut value_loss = 0.0;
    let mut d_value = DMatrix::zeros(1, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        let err = values[(0, j)] - batch.returns[i];
        value_loss += err * err / b;
        d_value[(0, j)] = config.value_coef * 2.0 * err / b;
    }

    let actor_grad = params.actor.backward(&actor_cache, &d_mean);
    let critic_grad = params.critic.backward(&critic_cache, &d_value);
    let mut grads: Vec<Vec<f64>> = actor_grad.tensors().iter().map(|t| t.to_vec()).collect();
    grads.push(d_log_std);
    grads.extend(critic_grad.tensors().iter().map(|t| t.to_vec()));
    Evaluation { policy_loss, value_loss, approx_kl, clip_fraction: clipped, grads }
}

/// Runs the configured epochs of shuffled minibatch steps on `params`.
///
/// Aborts on the first non-finite loss, leaving `params` at the last finite
/// step.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParameters,
    optimizer: &mut Adam,
    batch: &TrainingBatch,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let n = batch.len();
    let mut order: Vec<usize> = (0..n).collect();
    let size = n.div_ceil(config.minibatches);
    let mut stats = UpdateStats::default();
    let mut count = 0.0;
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        for (minibatch, idx) in order.chunks(size).enumerate() {
            let mut eval = evaluate(params, batch, idx, config);
            let entropy = params.entropy();
            let total = eval.policy_loss + config.value_coef * eval.value_loss - config.entropy_coef * entropy;
            if !total.is_finite() {
                let what = if !eval.policy_loss.is_finite() {
                    "policy loss"
                } else if !eval.value_loss.is_finite() {
                    "value loss"
                } else {
                    "entropy"
                };
                return Err(TrainError::NonFiniteLoss { what, epoch, minibatch });
            }
            let mut grad_refs: Vec<&mut [f64]> = eval.grads.iter_mut().map(|g| g.as_mut_slice()).collect();
            let grad_norm = clip_grad_norm(&mut grad_refs, config.max_grad_norm);
            if !grad_norm.is_finite() {
                return Err(TrainError::NonFiniteLoss { what: "gradient", epoch, minibatch });
            }
            let grads: Vec<&[f64]> = eval.grads.iter().map(|g| g.as_slice()).collect();
            optimizer.step(params.tensors_mut(), &grads);

            stats.policy_loss += eval.policy_loss;
            stats.value_loss += eval.value_loss;
            stats.entropy += entropy;
            stats.approx_kl += eval.approx_kl;
            stats.clip_fraction += eval.clip_fraction;
            stats.grad_norm += grad_norm;
            count += 1.0;
        }
    }
    for v in [
        &mut stats.policy_loss,
        &mut stats.value_loss,
        &mut stats.entropy,
        &mut stats.approx_kl,
        &mut stats.clip_fraction,
        &mut stats.grad_norm,
    ] {
        *v /= count;
    }
    Ok(stats)
}
