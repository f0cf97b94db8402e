//! Forward kinematics: body frames, body velocities, and the derived
//! quantities the environment consumes.

use nalgebra::{Matrix3, Vector3};

use super::model::{BaseKind, KinematicTree};
use super::spatial::{angular, axis_rotation, linear, spatial, PluckerTransform, SpatialVector};
use super::state::SimState;

/// Per-body frames for one state. Spatial velocities are body coordinates.
#[derive(Debug, Clone)]
pub struct BodyFrames {
    /// Body-to-world rotation.
    pub rotation: Vec<Matrix3<f64>>,
    /// Body origin in world coordinates.
    pub position: Vec<Vector3<f64>>,
    /// Parent-to-child transform for body `i` (entry 0 is unused).
    pub parent_transform: Vec<PluckerTransform>,
    pub velocity: Vec<SpatialVector>,
}

impl BodyFrames {
    pub fn compute(tree: &KinematicTree, state: &SimState) -> Self {
        let n = tree.bodies.len();
        let mut rotation = Vec::with_capacity(n);
        let mut position = Vec::with_capacity(n);
        let mut parent_transform = Vec::with_capacity(n);
        let mut velocity = Vec::with_capacity(n);

        let base_rot = *state.base_orientation.to_rotation_matrix().matrix();
        rotation.push(base_rot);
        position.push(state.base_position);
        parent_transform.push(PluckerTransform::identity());
        velocity.push(match tree.base {
            BaseKind::Floating => spatial(
                &(base_rot.transpose() * state.base_angular_velocity),
                &(base_rot.transpose() * state.base_linear_velocity),
            ),
            BaseKind::Fixed => SpatialVector::zeros(),
        });

        for (j, joint) in tree.joints.iter().enumerate() {
            let p = joint.parent_body;
            let joint_rot = axis_rotation(&joint.axis, state.q[j]);
            let x = PluckerTransform::new(joint_rot.transpose(), joint.origin);
            let v = x.apply_motion(&velocity[p]) + spatial(&(joint.axis * state.qdot[j]), &Vector3::zeros());
            rotation.push(rotation[p] * joint_rot);
            position.push(position[p] + rotation[p] * joint.origin);
            parent_transform.push(x);
            velocity.push(v);
        }
        Self { rotation, position, parent_transform, velocity }
    }

    /// World position of a point given in body coordinates.
    pub fn point_position(&self, body: usize, offset: &Vector3<f64>) -> Vector3<f64> {
        self.position[body] + self.rotation[body] * offset
    }

    /// World velocity of a point given in body coordinates.
    pub fn point_velocity(&self, body: usize, offset: &Vector3<f64>) -> Vector3<f64> {
        let v = &self.velocity[body];
        self.rotation[body] * (linear(v) + angular(v).cross(offset))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicsOutput {
    pub foot_positions: Vec<Vector3<f64>>,
    pub foot_velocities: Vec<Vector3<f64>>,
    pub com_position: Vector3<f64>,
    /// World gravity direction expressed in the base frame.
    pub projected_gravity: Vector3<f64>,
}

pub fn kinematics(tree: &KinematicTree, state: &SimState) -> KinematicsOutput {
    let frames = BodyFrames::compute(tree, state);
    kinematics_from_frames(tree, state, &frames)
}

pub(crate) fn kinematics_from_frames(tree: &KinematicTree, state: &SimState, frames: &BodyFrames) -> KinematicsOutput {
    let foot_positions = tree.feet.iter().map(|f| frames.point_position(f.body, &f.offset)).collect();
    let foot_velocities = tree.feet.iter().map(|f| frames.point_velocity(f.body, &f.offset)).collect();
    KinematicsOutput {
        foot_positions,
        foot_velocities,
        com_position: com_from_frames(tree, frames),
        projected_gravity: state.base_orientation.inverse_transform_vector(&Vector3::new(0.0, 0.0, -1.0)),
    }
}

fn com_from_frames(tree: &KinematicTree, frames: &BodyFrames) -> Vector3<f64> {
    let mut weighted = Vector3::zeros();
    let mut mass = 0.0;
    for (i, body) in tree.bodies.iter().enumerate() {
        weighted += frames.point_position(i, &body.inertia.com_offset) * body.inertia.mass;
        mass += body.inertia.mass;
    }
    weighted / mass
}

/// Kinetic plus gravitational potential energy, including rotor armature.
pub fn mechanical_energy(tree: &KinematicTree, state: &SimState) -> f64 {
    let frames = BodyFrames::compute(tree, state);
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for (i, body) in tree.bodies.iter().enumerate() {
        let v = &frames.velocity[i];
        kinetic += 0.5 * v.dot(&(tree.spatial_inertia(i) * v));
        let com = frames.point_position(i, &body.inertia.com_offset);
        potential -= body.inertia.mass * tree.gravity.dot(&com);
    }
    for (joint, qd) in tree.joints.iter().zip(&state.qdot) {
        kinetic += 0.5 * joint.armature * qd * qd;
    }
    kinetic + potential
}

/// Total linear momentum in world coordinates.
pub fn linear_momentum(tree: &KinematicTree, state: &SimState) -> Vector3<f64> {
    let frames = BodyFrames::compute(tree, state);
    tree.bodies
        .iter()
        .enumerate()
        .map(|(i, b)| frames.point_velocity(i, &b.inertia.com_offset) * b.inertia.mass)
        .sum()
}

/// Lowest floor clearance over the given bodies' geometry (negative when a
/// body penetrates the floor).
pub fn body_clearances(tree: &KinematicTree, frames: &BodyFrames, bodies: &[usize]) -> Vec<f64> {
    bodies
        .iter()
        .filter_map(|&b| tree.bodies[b].geometry.lowest_point(&frames.rotation[b], &frames.position[b]))
        .collect()
}
