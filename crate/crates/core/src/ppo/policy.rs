//! Asymmetric actor-critic: the actor sees the observation, the critic the
//! privileged state. Only the actor is needed at inference.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::Mlp;
use super::normalizer::RunningNormalizer;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParameters {
    pub actor: Mlp,
    /// State-independent log standard deviation per action dimension.
    pub log_std: Vec<f64>,
    pub critic: Mlp,
    pub obs_normalizer: RunningNormalizer,
    pub privileged_normalizer: RunningNormalizer,
}

impl PolicyParameters {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        privileged_dim: usize,
        action_dim: usize,
        actor_hidden: &[usize],
        critic_hidden: &[usize],
        init_std: f64,
        obs_clip: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            actor: Mlp::new(obs_dim, actor_hidden, action_dim, 0.01, rng),
            log_std: vec![init_std.ln(); action_dim],
            critic: Mlp::new(privileged_dim, critic_hidden, 1, 1.0, rng),
            obs_normalizer: RunningNormalizer::new(obs_dim, obs_clip),
            privileged_normalizer: RunningNormalizer::new(privileged_dim, obs_clip),
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn observation_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn privileged_dim(&self) -> usize {
        self.critic.input_dim()
    }

    /// Deterministic action (the Gaussian mean) for a raw observation.
    pub fn act(&self, observation: &[f64]) -> Vec<f64> {
        let x = columns(&[self.obs_normalizer.normalize(observation)]);
        self.actor.forward(&x).column(0).iter().copied().collect()
    }

    /// Value of one raw privileged state.
    pub fn value(&self, privileged: &[f64]) -> f64 {
        self.values(&columns(&[self.privileged_normalizer.normalize(privileged)]))[0]
    }

    /// Values of normalized privileged states (one per column).
    pub fn values(&self, privileged: &DMatrix<f64>) -> Vec<f64> {
        self.critic.forward(privileged).row(0).iter().copied().collect()
    }

    /// Samples `mean + σ·ε` per column of `means`, returning the actions and
    /// their log-probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, means: &DMatrix<f64>, rng: &mut R) -> (Vec<Vec<f64>>, Vec<f64>) {
        let std: Vec<f64> = self.log_std.iter().map(|l| l.exp()).collect();
        means
            .column_iter()
            .map(|mean| {
                let action: Vec<f64> = mean
                    .iter()
                    .zip(&std)
                    .map(|(m, s)| {
                        let eps: f64 = StandardNormal.sample(rng);
                        m + s * eps
                    })
                    .collect();
                let logp = self.log_prob(mean.as_slice(), &action);
                (action, logp)
            })
            .unzip()
    }

    /// Diagonal-Gaussian log density of `action` around `mean`.
    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(action)
            .zip(&self.log_std)
            .map(|((m, a), l)| {
                let z = (a - m) / l.exp();
                -0.5 * z * z - l - HALF_LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|l| 0.5 + HALF_LN_2PI + l).sum()
    }

    /// Optimized tensors: actor, log-std, critic (normalizers excluded).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.actor.tensors();
        t.push(&self.log_std);
        t.extend(self.critic.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.actor.tensors_mut();
        t.push(&mut self.log_std);
        t.extend(self.critic.tensors_mut());
        t
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Stacks equally long vectors as matrix columns.
pub fn columns(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(dim, rows.len(), |i, j| rows[j][i])
}
