//! Actor observation and privileged critic state.
//!
//! Actor: `[v_cmd (3), v (3), ω (3), g (3), q̇ (12), q − q_default (12), a_{t−1}]`,
//! velocities in the base frame. Critic: `[kp scale (12), kd scale (12),
//! motor strength (12), μ, mass deltas (5), F_kick (3)]` followed by the
//! noiseless actor observation.

use nalgebra::Vector3;
use rand::Rng;

use super::command::CommandVector;
use super::randomization::{EpisodeRandomization, NoiseConfig};
use crate::physics::{KinematicTree, SimState, NUM_JOINTS};

/// Observation length without the previous action.
pub const OBSERVATION_BASE_DIM: usize = 36;
/// Privileged entries in front of the observation.
pub const PRIVILEGED_EXTRA_DIM: usize = 45;

pub fn observation_dim(action_dim: usize) -> usize {
    OBSERVATION_BASE_DIM + action_dim
}

pub fn privileged_dim(action_dim: usize) -> usize {
    PRIVILEGED_EXTRA_DIM + observation_dim(action_dim)
}

/// Builds the actor observation. With `noise` absent (or disabled) this is a
/// pure function of its inputs.
pub fn observe<R: Rng + ?Sized>(
    tree: &KinematicTree,
    state: &SimState,
    command: &CommandVector,
    prev_action: &[f64],
    noise: Option<(&NoiseConfig, &mut R)>,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(observation_dim(prev_action.len()));
    out.extend(command.to_array());
    let v = state.local_linear_velocity();
    let w = state.local_angular_velocity();
    let g = state.base_orientation.inverse_transform_vector(&-Vector3::z());
    match noise {
        Some((cfg, rng)) if cfg.enabled => {
            let mut push = |x: f64, width: f64, rng: &mut R| out.push(x + NoiseConfig::draw(rng, width));
            v.iter().for_each(|x| push(*x, cfg.linear_velocity, rng));
            w.iter().for_each(|x| push(*x, cfg.angular_velocity, rng));
            g.iter().for_each(|x| push(*x, cfg.projected_gravity, rng));
            state.qdot.iter().for_each(|x| push(*x, cfg.joint_velocity, rng));
            for (q, q0) in state.q.iter().zip(&tree.q_default) {
                push(q - q0, cfg.joint_position, rng);
            }
        }
        _ => {
            out.extend(v.iter().chain(w.iter()).chain(g.iter()));
            out.extend(&state.qdot);
            out.extend(state.q.iter().zip(&tree.q_default).map(|(q, q0)| q - q0));
        }
    }
    out.extend(prev_action);
    out
}

/// Builds the privileged state around a noiseless observation.
pub fn observe_privileged(
    randomization: &EpisodeRandomization,
    friction: f64,
    push_force: &Vector3<f64>,
    clean_observation: &[f64],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(PRIVILEGED_EXTRA_DIM + clean_observation.len());
    out.extend(randomization.kp_scale);
    out.extend(randomization.kd_scale);
    out.extend(randomization.motor_strength);
    out.push(friction);
    out.extend(randomization.mass_deltas());
    out.extend(push_force.iter());
    debug_assert_eq!(out.len(), PRIVILEGED_EXTRA_DIM);
    debug_assert_eq!(3 * NUM_JOINTS + 9, PRIVILEGED_EXTRA_DIM);
    out.extend(clean_observation);
    out
}
