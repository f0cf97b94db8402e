//! Rollout storage and generalized advantage estimation.

/// Samples of one rollout, stored step-major: index `t·n_envs + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub n_steps: usize,
    pub n_envs: usize,
    /// Normalized actor inputs.
    pub observations: Vec<Vec<f64>>,
    /// Normalized critic inputs.
    pub privileged: Vec<Vec<f64>>,
    /// Sampled (unclamped) actions.
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// The episode ended in a failure state: no bootstrap.
    pub terminated: Vec<bool>,
    /// The episode hit its time limit: bootstrap from `bootstrap`.
    pub truncated: Vec<bool>,
    /// Value of the final state of a truncated episode.
    pub bootstrap: Vec<f64>,
    /// Value of each environment's state after the last step.
    pub last_values: Vec<f64>,
}

/// One environment's step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Vec<f64>,
    pub privileged: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub bootstrap: f64,
}

impl RolloutBuffer {
    pub fn new(n_steps: usize, n_envs: usize) -> Self {
        let cap = n_steps * n_envs;
        Self {
            n_steps,
            n_envs,
            observations: Vec::with_capacity(cap),
            privileged: Vec::with_capacity(cap),
            actions: Vec::with_capacity(cap),
            log_probs: Vec::with_capacity(cap),
            rewards: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
            terminated: Vec::with_capacity(cap),
            truncated: Vec::with_capacity(cap),
            bootstrap: Vec::with_capacity(cap),
            last_values: vec![0.0; n_envs],
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.n_steps * self.n_envs
    }

    pub fn push(&mut self, s: Sample) {
        assert!(!self.is_complete(), "rollout buffer is full");
        debug_assert!(s.reward.is_finite(), "non-finite reward");
        self.observations.push(s.observation);
        self.privileged.push(s.privileged);
        self.actions.push(s.action);
        self.log_probs.push(s.log_prob);
        self.rewards.push(s.reward);
        self.values.push(s.value);
        self.terminated.push(s.terminated);
        self.truncated.push(s.truncated);
        self.bootstrap.push(s.bootstrap);
    }
}

/// Advantages and returns (`advantage + value`) in buffer order.
///
/// `δ_t = r_t + γ·V_next − V_t`, where `V_next` is the next value inside an
/// episode, the bootstrap value at a time-limit cut, and zero at a failure;
/// `A_t = δ_t + γλ·A_{t+1}` with the recursion cut at every episode end.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(buffer.is_complete(), "incomplete rollout buffer");
    let (t_max, n) = (buffer.n_steps, buffer.n_envs);
    let mut advantages = vec![0.0; t_max * n];
    for e in 0..n {
        let mut next_advantage = 0.0;
        for t in (0..t_max).rev() {
            let i = t * n + e;
            let (next_value, carry) = if buffer.terminated[i] {
                (0.0, 0.0)
            } else if buffer.truncated[i] {
                (buffer.bootstrap[i], 0.0)
            } else if t + 1 == t_max {
                (buffer.last_values[e], 1.0)
            } else {
                (buffer.values[i + n], 1.0)
            };
            let delta = buffer.rewards[i] + gamma * next_value - buffer.values[i];
            next_advantage = delta + gamma * lambda * carry * next_advantage;
            advantages[i] = next_advantage;
        }
    }
    let returns = advantages.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Shifts and scales to zero mean and unit (population) variance.
pub fn normalize_advantages(advantages: &mut [f64]) {
    let n = advantages.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    advantages.iter_mut().for_each(|a| *a = (*a - mean) / std);
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_env(rewards: &[f64], values: &[f64], last: f64) -> RolloutBuffer {
        let mut b = RolloutBuffer::new(rewards.len(), 1);
        for (r, v) in rewards.iter().zip(values) {
            b.push(Sample {
                observation: vec![],
                privileged: vec![],
                action: vec![],
                log_prob: 0.0,
                reward: *r,
                value: *v,
                terminated: false,
                truncated: false,
                bootstrap: 0.0,
            });
        }
        b.last_values[0] = last;
        b
    }

    #[test]
    fn two_step_hand_example() {
        let b = single_env(&[1.0, 1.0], &[0.5, 0.5], 0.5);
        let (adv, ret) = compute_gae(&b, 0.99, 0.95);
        assert!((adv[1] - 0.995).abs() < 1e-12);
        assert!((adv[0] - (0.995 + 0.99 * 0.95 * 0.995)).abs() < 1e-12);
        assert!((ret[0] - adv[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_gives_one_step_advantage() {
        let b = single_env(&[0.3, -1.0, 2.0], &[0.1, 0.4, -0.2], 0.7);
        let (adv, _) = compute_gae(&b, 0.9, 0.0);
        let deltas = [0.3 + 0.9 * 0.4 - 0.1, -1.0 + 0.9 * -0.2 - 0.4, 2.0 + 0.9 * 0.7 + 0.2];
        for (a, d) in adv.iter().zip(deltas) {
            assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn termination_cuts_and_truncation_bootstraps() {
        let mut b = single_env(&[1.0, 1.0, 5.0], &[0.0, 0.0, 0.0], 9.0);
        b.terminated[1] = true;
        let (adv, _) = compute_gae(&b, 0.5, 1.0);
        assert_eq!(adv[1], 1.0);
        assert_eq!(adv[0], 1.0 + 0.5 * 1.0);

        b.terminated[1] = false;
        b.truncated[1] = true;
        b.bootstrap[1] = 4.0;
        let (adv, _) = compute_gae(&b, 0.5, 1.0);
        assert_eq!(adv[1], 1.0 + 0.5 * 4.0);
    }

    #[test]
    fn normalized_advantages_have_unit_moments() {
        let mut a: Vec<f64> = (0..37).map(|i| (i as f64 * 1.3).sin() * 4.0 + 2.0).collect();
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 37.0;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 37.0).sqrt();
        assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-6);
    }
}
