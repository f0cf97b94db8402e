use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stiffquad::actuation::GainState;
use stiffquad::env::*;
use stiffquad::physics::{refresh_contacts, KinematicTree, SimState};

fn random_state(tree: &KinematicTree, z: f64, v: [f64; 3], w: [f64; 3], rpy: [f64; 3], dq: &[f64]) -> SimState {
    let q: Vec<f64> = tree.q_default.iter().zip(dq).map(|(a, b)| a + b).collect();
    let mut s = SimState::at_rest(tree, Vector3::new(0.0, 0.0, z), q);
    s.base_linear_velocity = Vector3::from(v);
    s.base_angular_velocity = Vector3::from(w);
    s.base_orientation = UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]);
    s.qdot = dq.iter().map(|x| 10.0 * x).collect();
    refresh_contacts(tree, &mut s);
    s
}

prop_compose! {
    fn arb_state()(
        z in 0.15f64..0.6,
        v in prop::array::uniform3(-1.5f64..1.5),
        w in prop::array::uniform3(-2.0f64..2.0),
        rpy in prop::array::uniform3(-0.4f64..0.4),
        dq in prop::collection::vec(-0.3f64..0.3, 12),
    ) -> SimState {
        random_state(&KinematicTree::default_quadruped(), z, v, w, rpy, &dq)
    }
}

fn arb_command() -> impl Strategy<Value = CommandVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, w)| CommandVector::new(x, y, w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reward_invariants(
        prev in arb_state(),
        state in arb_state(),
        command in arb_command(),
        air in prop::array::uniform4(prop::option::of(0.0f64..1.0)),
        power in prop::array::uniform12(0.0f64..50.0),
        action in prop::collection::vec(-1.0f64..1.0, 16),
        terminated in any::<bool>(),
    ) {
        let tree = KinematicTree::default_quadruped();
        let config = EnvConfig::default();
        let gains = GainState::uniform(40.0, tree.q_default.clone().try_into().unwrap());
        let sig = StepSignals { command, joint_power: power, touchdowns: air, terminated };
        let r = reward_terms(&tree, &prev, &state, &action, &[0.0; 16], &gains, &sig, &config);

        for t in [RewardTerm::LinVelTracking, RewardTerm::AngVelTracking] {
            let x = r.raw_of(t);
            prop_assert!(x > 0.0 && x <= 1.0);
        }
        if command.planar_speed() <= 0.1 {
            prop_assert_eq!(r.raw_of(RewardTerm::FeetAirTime), 0.0);
        }
        let feet = stiffquad::physics::kinematics(&tree, &state).foot_positions;
        if feet.iter().all(|p| p.z >= 0.01) {
            prop_assert_eq!(r.raw_of(RewardTerm::FootSlip), 0.0);
        }
        let w = config.rewards.as_array();
        let mut total = 0.0;
        for i in 0..18 {
            prop_assert!(r.raw[i].is_finite());
            prop_assert_eq!(r.weighted[i], w[i] * r.raw[i] * config.control_dt);
            total += r.weighted[i];
        }
        prop_assert_eq!(r.total, total);
        prop_assert_eq!(r.raw_of(RewardTerm::Termination), if terminated { 1.0 } else { 0.0 });
    }

    #[test]
    fn clean_observation_is_pure(state in arb_state(), command in arb_command(), action in prop::collection::vec(-1.0f64..1.0, 19)) {
        let tree = KinematicTree::default_quadruped();
        let a = observe::<ChaCha8Rng>(&tree, &state, &command, &action, None);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let off = NoiseConfig { enabled: false, ..Default::default() };
        let b = observe(&tree, &state, &command, &action, Some((&off, &mut rng)));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 55);
        prop_assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn exactly_one_status(state in arb_state(), steps in 0usize..1200) {
        let tree = KinematicTree::default_quadruped();
        let status = check_termination(&tree, &state, steps, 1000);
        let flags = [status == EpisodeStatus::Running, status.is_terminated(), status == EpisodeStatus::Truncated];
        prop_assert_eq!(flags.iter().filter(|f| **f).count(), 1);
        if steps < 1000 {
            prop_assert!(status != EpisodeStatus::Truncated);
        }
    }
}

#[test]
fn hundred_thousand_randomization_draws_stay_in_support() {
    let config = DomainRandomizationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let within = |x: f64, [lo, hi]: [f64; 2]| (lo..=hi).contains(&x);
    for _ in 0..100_000 {
        let r = config.sample(&mut rng, 0.002);
        assert!(within(r.payload, config.payload));
        assert!(r.hip_mass.iter().all(|x| within(*x, config.hip_mass)));
        assert!(within(r.friction_scale, config.friction));
        assert!(within(r.gravity_offset, config.gravity_offset));
        assert!(within(r.delay_s * 1e3, config.delay_ms) && r.delay_substeps <= 7);
        assert!(r.kp_scale.iter().all(|x| within(*x, config.kp_scale)));
        assert!(r.kd_scale.iter().all(|x| within(*x, config.kd_scale)));
        assert!(r.motor_strength.iter().all(|x| within(*x, config.motor_strength)));
    }
}

#[test]
fn noise_channels_stay_in_support() {
    let tree = KinematicTree::default_quadruped();
    let state = random_state(&tree, 0.3, [0.2, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0; 3], &[0.05; 12]);
    let noise = NoiseConfig::default();
    let clean = observe::<ChaCha8Rng>(&tree, &state, &CommandVector::default(), &[0.0; 16], None);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let widths: Vec<(std::ops::Range<usize>, f64)> = vec![
        (3..6, noise.linear_velocity),
        (6..9, noise.angular_velocity),
        (9..12, noise.projected_gravity),
        (12..24, noise.joint_velocity),
        (24..36, noise.joint_position),
    ];
    for _ in 0..100_000 {
        let o = observe(&tree, &state, &CommandVector::default(), &[0.0; 16], Some((&noise, &mut rng)));
        for (range, w) in &widths {
            for i in range.clone() {
                assert!((o[i] - clean[i]).abs() <= *w + 1e-12);
            }
        }
    }
}
