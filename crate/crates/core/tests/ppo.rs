mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiffquad::actuation::StiffnessGrouping;
use stiffquad::env::EnvConfig;
use stiffquad::physics::KinematicTree;
use stiffquad::ppo::{compute_gae, normalize_advantages, train, Checkpoint, RolloutBuffer, Sample, TrainConfig};

use common::*;

#[test]
fn gae_matches_brute_force_on_random_buffers() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let gamma = rng.random_range(0.8..1.0);
        let lambda = rng.random_range(0.5..1.0);
        let b = random_buffer(&mut rng, 50, 3, 1);
        let (adv, ret) = compute_gae(&b, gamma, lambda);
        for ((a, o), (r, v)) in adv.iter().zip(brute_force_advantages(&b, gamma, lambda)).zip(ret.iter().zip(&b.values)) {
            assert!((a - o).abs() < 1e-9, "{a} vs {o}");
            assert!((r - a - v).abs() < 1e-12);
        }
    }
}

#[test]
fn gae_two_step_example() {
    let mut b = RolloutBuffer::new(2, 1);
    for _ in 0..2 {
        b.push(Sample {
            observation: vec![],
            privileged: vec![],
            action: vec![],
            log_prob: 0.0,
            reward: 1.0,
            value: 0.5,
            terminated: false,
            truncated: false,
            bootstrap: 0.0,
        });
    }
    b.last_values[0] = 0.5;
    let (adv, _) = compute_gae(&b, 0.99, 0.95);
    assert!((adv[1] - 0.995).abs() < 1e-9);
    assert!((adv[0] - 1.930_797_5).abs() < 1e-9);
    assert_eq!(format!("{:.5}", adv[0]), "1.93080");
}

proptest! {
    #[test]
    fn done_isolates_earlier_steps(seed in any::<u64>(), cut in 0usize..29, noise in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = random_buffer(&mut rng, 30, 1, 1);
        b.terminated[cut] = true;
        let (before, _) = compute_gae(&b, 0.99, 0.95);
        for t in cut + 1..30 {
            b.rewards[t] += noise;
            b.values[t] -= noise;
        }
        b.last_values[0] += noise;
        let (after, _) = compute_gae(&b, 0.99, 0.95);
        prop_assert_eq!(&before[..=cut], &after[..=cut]);
    }

    #[test]
    fn value_targets_ignore_the_action_space(seed in any::<u64>()) {
        let b12 = random_buffer(&mut ChaCha8Rng::seed_from_u64(seed), 20, 2, 12);
        let b19 = random_buffer(&mut ChaCha8Rng::seed_from_u64(seed), 20, 2, 19);
        prop_assert_eq!(compute_gae(&b12, 0.99, 0.95), compute_gae(&b19, 0.99, 0.95));
    }

    #[test]
    fn normalization_gives_zero_mean_unit_std(values in prop::collection::vec(-100.0f64..100.0, 2..300)) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-3));
        let mut a = values;
        normalize_advantages(&mut a);
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((std - 1.0).abs() < 1e-6);
    }
}

#[test]
fn bandit_converges_to_optimum() {
    let mean = train_bandit(200, 5);
    assert!((mean - 0.3).abs() < 0.05, "actor mean {mean}");
}

fn tiny_config(n_envs: usize, iterations: usize) -> TrainConfig {
    TrainConfig {
        n_envs,
        n_iterations: iterations,
        actor_hidden: vec![32, 32],
        critic_hidden: vec![32, 32],
        seed: 3,
        checkpoint_every: 1,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic() {
    let tree = KinematicTree::default_quadruped();
    let run = |dir: &std::path::Path| {
        train(&tree, StiffnessGrouping::Pls, &EnvConfig::default(), &tiny_config(8, 2), Some(dir), |_| {}).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run(a.path()), run(b.path()));
    assert_eq!(ra.metrics, rb.metrics);
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("metrics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(ra.checkpoints.len(), 3);
    assert!(ra.metrics.iter().all(|m| m.is_finite()));
    let c = Checkpoint::load(&a.path().join("policy_final.vstk")).unwrap();
    assert_eq!((c.grouping, c.iteration), (StiffnessGrouping::Pls, 2));
    assert_eq!(std::fs::read(a.path().join("policy_final.vstk")).unwrap(), std::fs::read(b.path().join("policy_final.vstk")).unwrap());
}

#[test]
fn fixed_gain_training_logs_constant_stiffness() {
    let tree = KinematicTree::default_quadruped();
    let out = train(&tree, StiffnessGrouping::FixedP20, &EnvConfig::default(), &tiny_config(4, 2), None, |_| {}).unwrap();
    for m in &out.metrics {
        assert!(m.mean_kp.iter().all(|kp| (kp - 20.0).abs() < 1e-12), "{:?}", m.mean_kp);
    }
}

#[test]
fn metrics_csv_has_one_row_per_iteration() {
    let tree = KinematicTree::default_quadruped();
    let dir = tempfile::tempdir().unwrap();
    train(&tree, StiffnessGrouping::Hjls, &EnvConfig::default(), &tiny_config(4, 3), Some(dir.path()), |_| {}).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("metrics.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "reward_lin_vel_tracking"));
    assert!(headers.iter().any(|h| h == "kp_knee"));
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == headers.len()));
}
