use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::contact::{forces_from_kinematics, implicit_contact_forces};
use super::dynamics::{body_wrenches, world_point_wrench, Articulated, GeneralizedAcceleration};
use super::spatial::{angular, linear};
use super::kinematics::{kinematics_from_frames, BodyFrames};
use super::model::{BaseKind, KinematicTree};
use super::state::{check_finite, ExternalForce, SimState};
use crate::error::PhysicsError;

pub const MAX_TIMESTEP: f64 = 0.01;
pub const DIVERGENCE_VELOCITY: f64 = 1e4;

/// Advances the state by one semi-implicit Euler step: velocities from the
/// current accelerations, then positions from the new velocities. Joint
/// positions are clamped to their limits (stopping the joint) and joint
/// speeds to their velocity limits.
pub fn step(
    tree: &KinematicTree,
    state: &SimState,
    tau: &[f64],
    ext: &[ExternalForce],
    dt: f64,
) -> Result<SimState, PhysicsError> {
    if !(dt > 0.0 && dt <= MAX_TIMESTEP) {
        return Err(PhysicsError::InvalidTimestep(dt));
    }
    state.check(tree)?;
    if tau.len() != tree.num_joints() {
        return Err(PhysicsError::Dimension { what: "tau", expected: tree.num_joints(), actual: tau.len() });
    }
    check_finite("tau", tau)?;
    ext.iter().try_for_each(|e| e.check(tree))?;

    let frames = BodyFrames::compute(tree, state);
    let kin = kinematics_from_frames(tree, state, &frames);
    let no_contact = vec![Vector3::zeros(); tree.feet.len()];
    let wrenches = body_wrenches(tree, &frames, &no_contact, &kin.foot_positions, ext);
    let articulated = Articulated::new(tree, state, &frames, tau, &wrenches);
    let mut acc: GeneralizedAcceleration = articulated.acceleration.clone();
    let depths: Vec<f64> =
        tree.feet.iter().zip(&kin.foot_positions).map(|(foot, p)| foot.radius - p.z).collect();
    if depths.iter().any(|&d| d > 0.0) {
        add_contact_response(tree, state, &frames, &kin.foot_positions, &depths, &articulated, &mut acc, dt);
    }

    let mut next = state.clone();
    if tree.base == BaseKind::Floating {
        next.base_linear_velocity += acc.base_linear * dt;
        next.base_angular_velocity += acc.base_angular * dt;
        next.base_position += next.base_linear_velocity * dt;
        let rotated = UnitQuaternion::from_scaled_axis(next.base_angular_velocity * dt) * state.base_orientation;
        next.base_orientation = UnitQuaternion::new_normalize(rotated.into_inner());
    }
    for (i, joint) in tree.joints.iter().enumerate() {
        let qd = (state.qdot[i] + acc.joints[i] * dt).clamp(-joint.velocity_limit, joint.velocity_limit);
        let q = state.q[i] + qd * dt;
        let [lo, hi] = joint.position_limit;
        let (q, qd) = if q < lo {
            (lo, qd.max(0.0))
        } else if q > hi {
            (hi, qd.min(0.0))
        } else {
            (q, qd)
        };
        next.q[i] = q;
        next.qdot[i] = qd;
    }
    next.time += dt;

    let max_velocity = next.max_abs_velocity();
    if !(max_velocity <= DIVERGENCE_VELOCITY) || !next.base_position.iter().all(|v| v.is_finite()) {
        return Err(PhysicsError::Diverged { time: next.time, max_velocity });
    }

    refresh_contacts(tree, &mut next);
    Ok(next)
}

/// Adds the generalized acceleration produced by the foot contacts, with the
/// penalty law evaluated at the end-of-step foot velocities.
#[allow(clippy::too_many_arguments)]
fn add_contact_response(
    tree: &KinematicTree,
    state: &SimState,
    frames: &BodyFrames,
    foot_points: &[Vector3<f64>],
    depths: &[f64],
    articulated: &Articulated,
    acc: &mut GeneralizedAcceleration,
    dt: f64,
) {
    let n = tree.feet.len();
    let active: Vec<usize> = (0..n).filter(|&i| depths[i] > 0.0).collect();

    // Foot velocities after a contact-free step.
    let mut free = state.clone();
    free.base_linear_velocity += acc.base_linear * dt;
    free.base_angular_velocity += acc.base_angular * dt;
    for (qd, a) in free.qdot.iter_mut().zip(&acc.joints) {
        *qd += a * dt;
    }
    let free_frames = BodyFrames::compute(tree, &free);
    let free_velocity: Vec<Vector3<f64>> =
        active.iter().map(|&i| free_frames.point_velocity(tree.feet[i].body, &tree.feet[i].offset)).collect();

    // Unit-force responses: coupling[r][c] maps force on foot c to the
    // velocity rate of foot r; responses[c][k] is the generalized response.
    let m = active.len();
    let mut coupling = vec![vec![Matrix3::zeros(); m]; m];
    let mut responses = Vec::with_capacity(m);
    for (c, &i) in active.iter().enumerate() {
        let foot = &tree.feet[i];
        let mut per_axis = Vec::with_capacity(3);
        for k in 0..3 {
            let wrench = world_point_wrench(frames, foot.body, &Vector3::ith(k, 1.0), &foot_points[i]);
            let (body_acc, generalized) = articulated.response(tree, frames, foot.body, &wrench);
            for (r, &j) in active.iter().enumerate() {
                let other = &tree.feet[j];
                let a = &body_acc[other.body];
                let rate = frames.rotation[other.body] * (linear(a) + angular(a).cross(&other.offset));
                coupling[r][c].set_column(k, &rate);
            }
            per_axis.push(generalized);
        }
        responses.push(per_axis);
    }

    let active_depths: Vec<f64> = active.iter().map(|&i| depths[i]).collect();
    let forces = implicit_contact_forces(
        &active_depths,
        &free_velocity,
        &coupling,
        &tree.contact,
        tree.contact.friction,
        dt,
    );
    for (per_axis, force) in responses.iter().zip(&forces) {
        for (response, f) in per_axis.iter().zip(force.iter()) {
            acc.base_linear += response.base_linear * *f;
            acc.base_angular += response.base_angular * *f;
            for (a, r) in acc.joints.iter_mut().zip(&response.joints) {
                *a += r * f;
            }
        }
    }
}

/// Recomputes contact flags and forces for the current configuration.
pub fn refresh_contacts(tree: &KinematicTree, state: &mut SimState) {
    let frames = BodyFrames::compute(tree, state);
    let kin = kinematics_from_frames(tree, state, &frames);
    let (forces, flags) = forces_from_kinematics(tree, &kin, tree.contact.friction);
    state.contact_forces = forces;
    state.contact_flags = flags;
}
