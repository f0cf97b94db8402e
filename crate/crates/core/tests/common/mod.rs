//! Reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiffquad::ppo::{
    columns, compute_gae, normalize_advantages, ppo_update, Adam, PolicyParameters, RolloutBuffer, Sample, TrainConfig,
    TrainingBatch,
};

pub fn rbf(a: &[f64], b: &[f64], w: f64) -> f64 {
    (-a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / (2.0 * w * w)).exp()
}

/// Solves the dual's KKT system for every assignment of points to
/// {α = 0, free, α = C} produced by `assignments`; returns the decision
/// function of the first assignment satisfying all conditions.
pub fn exhaustive_decision(
    points: &[Vec<f64>],
    labels: &[bool],
    c: f64,
    width: f64,
    assignments: impl Iterator<Item = Vec<u8>>,
) -> Option<(Vec<f64>, f64)> {
    let n = points.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let k = |i: usize, j: usize| rbf(&points[i], &points[j], width);
    for status in assignments {
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 1).collect();
        if free.is_empty() {
            continue;
        }
        let at_c: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let m = free.len();
        let mut a = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (col, &j) in free.iter().enumerate() {
                a[(r, col)] = y[j] * k(i, j);
            }
            a[(r, m)] = 1.0;
            rhs[r] = y[i] - at_c.iter().map(|&j| c * y[j] * k(i, j)).sum::<f64>();
        }
        for (col, &j) in free.iter().enumerate() {
            a[(m, col)] = y[j];
        }
        rhs[m] = -at_c.iter().map(|&j| c * y[j]).sum::<f64>();
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        let mut alpha = vec![0.0; n];
        for (col, &j) in free.iter().enumerate() {
            alpha[j] = sol[col];
        }
        for &j in &at_c {
            alpha[j] = c;
        }
        let b = sol[m];
        if free.iter().any(|&j| !(alpha[j] > -1e-12 && alpha[j] < c + 1e-12)) {
            continue;
        }
        let f = |i: usize| (0..n).map(|j| alpha[j] * y[j] * k(i, j)).sum::<f64>() + b;
        let feasible = (0..n).all(|i| match status[i] {
            0 => y[i] * f(i) >= 1.0 - 1e-9,
            2 => y[i] * f(i) <= 1.0 + 1e-9,
            _ => true,
        });
        if feasible {
            let coef = (0..n).map(|j| alpha[j] * y[j]).collect();
            return Some((coef, b));
        }
    }
    None
}

pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..3usize.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let s = (code % 3) as u8;
                code /= 3;
                s
            })
            .collect()
    })
}

/// Free sets of up to `max_free` points, everything else at zero.
pub fn sparse_assignments(n: usize, max_free: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in start..n {
            cur[i] = 1;
            rec(i + 1, n, left - 1, cur, out);
            cur[i] = 0;
        }
    }
    rec(0, n, max_free, &mut vec![0; n], &mut out);
    out
}

pub fn decision_at(points: &[Vec<f64>], coef: &[f64], b: f64, width: f64, x: &[f64]) -> f64 {
    points.iter().zip(coef).map(|(p, c)| c * rbf(p, x, width)).sum::<f64>() + b
}

pub fn cloud(rng: &mut ChaCha8Rng, n: usize, separable: bool) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    while points.len() < n {
        let p: Vec<f64> = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let s = p[0] + 0.5 * p[1];
        if separable && s.abs() < 0.4 {
            continue;
        }
        let flip = !separable && rng.random::<f64>() < 0.25;
        labels.push((s > 0.0) != flip);
        points.push(p);
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        labels[0] = !labels[0];
    }
    (points, labels)
}

pub fn probes() -> Vec<Vec<f64>> {
    (0..25).map(|k| vec![-2.0 + (k % 5) as f64, -2.0 + (k / 5) as f64]).collect()
}

pub fn random_buffer(rng: &mut ChaCha8Rng, steps: usize, envs: usize, action_dim: usize) -> RolloutBuffer {
    let mut b = RolloutBuffer::new(steps, envs);
    for _ in 0..steps * envs {
        let end: f64 = rng.random();
        b.push(Sample {
            observation: vec![],
            privileged: vec![],
            action: vec![0.0; action_dim],
            log_prob: 0.0,
            reward: rng.random_range(-2.0..2.0),
            value: rng.random_range(-3.0..3.0),
            terminated: end < 0.05,
            truncated: (0.05..0.08).contains(&end),
            bootstrap: rng.random_range(-3.0..3.0),
        });
    }
    b.last_values = (0..envs).map(|_| rng.random_range(-3.0..3.0)).collect();
    b
}

/// Direct discounted sum of TD residuals up to the episode end.
pub fn brute_force_advantages(b: &RolloutBuffer, gamma: f64, lambda: f64) -> Vec<f64> {
    let (t_max, n) = (b.n_steps, b.n_envs);
    let delta = |t: usize, e: usize| {
        let i = t * n + e;
        let next = if b.terminated[i] {
            0.0
        } else if b.truncated[i] {
            b.bootstrap[i]
        } else if t + 1 == t_max {
            b.last_values[e]
        } else {
            b.values[i + n]
        };
        b.rewards[i] + gamma * next - b.values[i]
    };
    let mut out = vec![0.0; t_max * n];
    for e in 0..n {
        for t in 0..t_max {
            let mut sum = 0.0;
            let mut weight = 1.0;
            for k in t..t_max {
                sum += weight * delta(k, e);
                let i = k * n + e;
                if b.terminated[i] || b.truncated[i] {
                    break;
                }
                weight *= gamma * lambda;
            }
            out[t * n + e] = sum;
        }
    }
    out
}

/// One-step episodes with reward −(a − 0.3)²; returns the final actor mean.
pub fn train_bandit(iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = TrainConfig::default();
    let mut params = PolicyParameters::new(1, 1, 1, &[16], &[16], 0.5, 5.0, &mut rng);
    let mut adam = Adam::new(config.learning_rate, &params.tensor_sizes());
    let n = 256;
    let obs = vec![vec![1.0]; n];
    for _ in 0..iterations {
        let means = params.actor.forward(&columns(&obs));
        let value = params.values(&columns(&obs[..1]))[0];
        let (actions, log_probs) = params.sample(&means, &mut rng);
        let mut buffer = RolloutBuffer::new(1, n);
        for (action, log_prob) in actions.into_iter().zip(log_probs) {
            let a = action[0].clamp(-1.0, 1.0);
            buffer.push(Sample {
                observation: vec![1.0],
                privileged: vec![1.0],
                action,
                log_prob,
                reward: -(a - 0.3).powi(2),
                value,
                terminated: true,
                truncated: false,
                bootstrap: 0.0,
            });
        }
        let (mut advantages, returns) = compute_gae(&buffer, config.gamma, config.lambda);
        normalize_advantages(&mut advantages);
        let batch = TrainingBatch {
            observations: buffer.observations,
            privileged: buffer.privileged,
            actions: buffer.actions,
            log_probs: buffer.log_probs,
            advantages,
            returns,
        };
        ppo_update(&mut params, &mut adam, &batch, &config, &mut rng).unwrap();
        assert!(params.is_finite());
    }
    params.act(&[1.0])[0]
}

