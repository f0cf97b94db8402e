//! Articulated-body forward dynamics and recursive Newton–Euler inverse
//! dynamics for floating- or fixed-base trees.

use nalgebra::Vector3;

use super::kinematics::{kinematics_from_frames, BodyFrames};
use super::model::{BaseKind, KinematicTree};
use super::spatial::{angular, cross_force, cross_motion, linear, spatial, SpatialMatrix, SpatialVector};
use super::state::{check_finite, ExternalForce, SimState};
use crate::error::PhysicsError;

/// Generalized acceleration: base linear (world, of the base origin), base
/// angular (world), then one entry per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedAcceleration {
    pub base_linear: Vector3<f64>,
    pub base_angular: Vector3<f64>,
    pub joints: Vec<f64>,
}

impl GeneralizedAcceleration {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 + self.joints.len());
        out.extend(self.base_linear.iter());
        out.extend(self.base_angular.iter());
        out.extend(self.joints.iter());
        out
    }
}

/// Converts a world force at a world point into a body-frame wrench about the
/// body origin.
pub(crate) fn world_point_wrench(frames: &BodyFrames, body: usize, force: &Vector3<f64>, point: &Vector3<f64>) -> SpatialVector {
    let rt = frames.rotation[body].transpose();
    let f = rt * force;
    let r = rt * (point - frames.position[body]);
    spatial(&r.cross(&f), &f)
}

/// Body-frame wrenches from gravity, foot contacts, and external forces.
pub(crate) fn body_wrenches(
    tree: &KinematicTree,
    frames: &BodyFrames,
    contact: &[Vector3<f64>],
    foot_points: &[Vector3<f64>],
    ext: &[ExternalForce],
) -> Vec<SpatialVector> {
    let mut wrenches: Vec<SpatialVector> = (0..tree.bodies.len())
        .map(|i| {
            let g_body = frames.rotation[i].transpose() * tree.gravity;
            tree.spatial_inertia(i) * spatial(&Vector3::zeros(), &g_body)
        })
        .collect();
    for ((foot, force), point) in tree.feet.iter().zip(contact).zip(foot_points) {
        wrenches[foot.body] += world_point_wrench(frames, foot.body, force, point);
    }
    for e in ext {
        wrenches[e.body] += world_point_wrench(frames, e.body, &e.force, &e.application_point);
    }
    wrenches
}

fn check_inputs(tree: &KinematicTree, state: &SimState, tau: &[f64], ext: &[ExternalForce]) -> Result<(), PhysicsError> {
    state.check(tree)?;
    if tau.len() != tree.num_joints() {
        return Err(PhysicsError::Dimension { what: "tau", expected: tree.num_joints(), actual: tau.len() });
    }
    check_finite("tau", tau)?;
    ext.iter().try_for_each(|e| e.check(tree))
}

/// Forward dynamics under gravity, penalty contacts (at the tree's friction
/// coefficient), joint torques `tau`, and external point forces.
pub fn forward_dynamics(
    tree: &KinematicTree,
    state: &SimState,
    tau: &[f64],
    ext: &[ExternalForce],
) -> Result<GeneralizedAcceleration, PhysicsError> {
    check_inputs(tree, state, tau, ext)?;
    let frames = BodyFrames::compute(tree, state);
    let kin = kinematics_from_frames(tree, state, &frames);
    let (contact, _) = super::contact::forces_from_kinematics(tree, &kin, tree.contact.friction);
    let wrenches = body_wrenches(tree, &frames, &contact, &kin.foot_positions, ext);
    Ok(articulated_body(tree, state, &frames, tau, &wrenches))
}

/// Featherstone's articulated-body algorithm with external body wrenches.
pub(crate) fn articulated_body(
    tree: &KinematicTree,
    state: &SimState,
    frames: &BodyFrames,
    tau: &[f64],
    wrenches: &[SpatialVector],
) -> GeneralizedAcceleration {
    Articulated::new(tree, state, frames, tau, wrenches).acceleration
}

/// Articulated inertias of one configuration, kept so that the response to
/// additional body wrenches can be computed without redoing the sweep.
pub(crate) struct Articulated {
    u_vec: Vec<SpatialVector>,
    d_inv: Vec<f64>,
    base_inverse: SpatialMatrix,
    pub acceleration: GeneralizedAcceleration,
}

impl Articulated {
    pub fn new(
        tree: &KinematicTree,
        state: &SimState,
        frames: &BodyFrames,
        tau: &[f64],
        wrenches: &[SpatialVector],
    ) -> Self {
        let nb = tree.bodies.len();
        let mut bias_acc = vec![SpatialVector::zeros(); nb];
        let mut art_inertia: Vec<SpatialMatrix> = (0..nb).map(|i| *tree.spatial_inertia(i)).collect();
        let mut bias_force: Vec<SpatialVector> = (0..nb)
            .map(|i| {
                let v = &frames.velocity[i];
                cross_force(v, &(tree.spatial_inertia(i) * v)) - wrenches[i]
            })
            .collect();

        for (j, joint) in tree.joints.iter().enumerate() {
            let s = spatial(&(joint.axis * state.qdot[j]), &Vector3::zeros());
            bias_acc[j + 1] = cross_motion(&frames.velocity[j + 1], &s);
        }

        let mut u_vec = vec![SpatialVector::zeros(); nb];
        let mut d_inv = vec![0.0; nb];
        let mut u_scalar = vec![0.0; nb];
        for (j, joint) in tree.joints.iter().enumerate().rev() {
            let i = j + 1;
            let axis = spatial(&joint.axis, &Vector3::zeros());
            let u = art_inertia[i] * axis;
            let d = axis.dot(&u) + joint.armature;
            let us = tau[j] - axis.dot(&bias_force[i]);
            u_vec[i] = u;
            d_inv[i] = 1.0 / d;
            u_scalar[i] = us;
            let ia = art_inertia[i] - u * u.transpose() * d_inv[i];
            let pa = bias_force[i] + ia * bias_acc[i] + u * (us * d_inv[i]);
            let x = frames.parent_transform[i];
            let xm = x.to_matrix();
            let p = joint.parent_body;
            art_inertia[p] += xm.transpose() * ia * xm;
            bias_force[p] += x.transpose_apply_force(&pa);
        }

        let base_inverse = match tree.base {
            BaseKind::Fixed => SpatialMatrix::zeros(),
            BaseKind::Floating => match art_inertia[0].cholesky() {
                Some(ch) => ch.inverse(),
                None => art_inertia[0].try_inverse().unwrap_or_else(SpatialMatrix::zeros),
            },
        };
        let mut acc = vec![SpatialVector::zeros(); nb];
        acc[0] = -(base_inverse * bias_force[0]);
        let mut qdd = vec![0.0; tree.num_joints()];
        for (j, joint) in tree.joints.iter().enumerate() {
            let i = j + 1;
            let a_prime = frames.parent_transform[i].apply_motion(&acc[joint.parent_body]) + bias_acc[i];
            qdd[j] = (u_scalar[i] - u_vec[i].dot(&a_prime)) * d_inv[i];
            acc[i] = a_prime + spatial(&(joint.axis * qdd[j]), &Vector3::zeros());
        }

        let (base_linear, base_angular) = match tree.base {
            BaseKind::Fixed => (Vector3::zeros(), Vector3::zeros()),
            BaseKind::Floating => {
                let r = &frames.rotation[0];
                let v = &frames.velocity[0];
                // Spatial to classical acceleration of the base origin.
                let classical = linear(&acc[0]) + angular(v).cross(&linear(v));
                (r * classical, r * angular(&acc[0]))
            }
        };
        let acceleration = GeneralizedAcceleration { base_linear, base_angular, joints: qdd };
        Self { u_vec, d_inv, base_inverse, acceleration }
    }

    /// Change in spatial body accelerations and generalized acceleration
    /// caused by an extra wrench on `body` (body frame). Velocity-product
    /// terms are already in the base solution, so the response is linear.
    pub fn response(
        &self,
        tree: &KinematicTree,
        frames: &BodyFrames,
        body: usize,
        wrench: &SpatialVector,
    ) -> (Vec<SpatialVector>, GeneralizedAcceleration) {
        let nb = tree.bodies.len();
        let mut bias = vec![SpatialVector::zeros(); nb];
        bias[body] = -wrench;
        // Only the path from `body` to the root carries force.
        let mut i = body;
        while i > 0 {
            let joint = &tree.joints[i - 1];
            let us = -joint_axis(joint).dot(&bias[i]);
            let pa = bias[i] + self.u_vec[i] * (us * self.d_inv[i]);
            let f = frames.parent_transform[i].transpose_apply_force(&pa);
            bias[joint.parent_body] += f;
            i = joint.parent_body;
        }

        let mut acc = vec![SpatialVector::zeros(); nb];
        acc[0] = -(self.base_inverse * bias[0]);
        let mut qdd = vec![0.0; tree.num_joints()];
        for (j, joint) in tree.joints.iter().enumerate() {
            let i = j + 1;
            let a_prime = frames.parent_transform[i].apply_motion(&acc[joint.parent_body]);
            let us = -joint_axis(joint).dot(&bias[i]);
            qdd[j] = (us - self.u_vec[i].dot(&a_prime)) * self.d_inv[i];
            acc[i] = a_prime + spatial(&(joint.axis * qdd[j]), &Vector3::zeros());
        }
        let (base_linear, base_angular) = match tree.base {
            BaseKind::Fixed => (Vector3::zeros(), Vector3::zeros()),
            BaseKind::Floating => (frames.rotation[0] * linear(&acc[0]), frames.rotation[0] * angular(&acc[0])),
        };
        (acc, GeneralizedAcceleration { base_linear, base_angular, joints: qdd })
    }
}

fn joint_axis(joint: &super::model::JointSpec) -> SpatialVector {
    spatial(&joint.axis, &Vector3::zeros())
}

/// Recursive Newton–Euler inverse dynamics.
///
/// Returns the wrench the world would have to apply to the base (zero for a
/// consistent floating-base acceleration) and the joint torques, both for the
/// given generalized acceleration under gravity, contacts, and `ext`.
pub fn inverse_dynamics(
    tree: &KinematicTree,
    state: &SimState,
    accel: &GeneralizedAcceleration,
    ext: &[ExternalForce],
) -> Result<(SpatialVector, Vec<f64>), PhysicsError> {
    state.check(tree)?;
    let frames = BodyFrames::compute(tree, state);
    let kin = kinematics_from_frames(tree, state, &frames);
    let (contact, _) = super::contact::forces_from_kinematics(tree, &kin, tree.contact.friction);
    let wrenches = body_wrenches(tree, &frames, &contact, &kin.foot_positions, ext);

    let nb = tree.bodies.len();
    let mut acc = vec![SpatialVector::zeros(); nb];
    if tree.base == BaseKind::Floating {
        let rt = frames.rotation[0].transpose();
        let v = &frames.velocity[0];
        let classical = rt * accel.base_linear;
        acc[0] = spatial(&(rt * accel.base_angular), &(classical - angular(v).cross(&linear(v))));
    }
    for (j, joint) in tree.joints.iter().enumerate() {
        let i = j + 1;
        let s_qd = spatial(&(joint.axis * state.qdot[j]), &Vector3::zeros());
        acc[i] = frames.parent_transform[i].apply_motion(&acc[joint.parent_body])
            + spatial(&(joint.axis * accel.joints[j]), &Vector3::zeros())
            + cross_motion(&frames.velocity[i], &s_qd);
    }
    let mut force: Vec<SpatialVector> = (0..nb)
        .map(|i| {
            let inertia = tree.spatial_inertia(i);
            let v = &frames.velocity[i];
            inertia * acc[i] + cross_force(v, &(inertia * v)) - wrenches[i]
        })
        .collect();
    let mut tau = vec![0.0; tree.num_joints()];
    for (j, joint) in tree.joints.iter().enumerate().rev() {
        let i = j + 1;
        tau[j] = spatial(&joint.axis, &Vector3::zeros()).dot(&force[i]) + joint.armature * accel.joints[j];
        let f = frames.parent_transform[i].transpose_apply_force(&force[i]);
        force[joint.parent_body] += f;
    }
    Ok((force[0], tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::fixtures::pendulum;
    use nalgebra::UnitQuaternion;

    #[test]
    fn pendulum_matches_closed_form() {
        let (l, m) = (0.7, 2.0);
        let tree = pendulum(l, m);
        let mut state = SimState::at_rest(&tree, Vector3::new(0.0, 0.0, 1.0), vec![0.3]);
        let qdd = forward_dynamics(&tree, &state, &[0.0], &[]).unwrap().joints[0];
        assert!((qdd + 9.81 / l * 0.3f64.sin()).abs() < 1e-9, "{qdd}");
        // Velocity does not enter a single pendulum's dynamics.
        state.qdot[0] = 3.0;
        let qdd = forward_dynamics(&tree, &state, &[0.0], &[]).unwrap().joints[0];
        assert!((qdd + 9.81 / l * 0.3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn free_fall_without_contact() {
        let tree = KinematicTree::default_quadruped();
        let mut state = SimState::at_rest(&tree, Vector3::new(0.0, 0.0, 2.0), tree.q_default.clone());
        state.base_orientation = UnitQuaternion::from_euler_angles(0.2, -0.1, 0.4);
        let acc = forward_dynamics(&tree, &state, &[0.0; 12], &[]).unwrap();
        assert!((acc.base_linear - tree.gravity).norm() < 1e-9, "{:?}", acc.base_linear);
        assert!(acc.base_angular.norm() < 1e-9);
        assert!(acc.joints.iter().all(|a| a.abs() < 1e-9));
    }

    #[test]
    fn aba_agrees_with_rnea() {
        let tree = KinematicTree::default_quadruped();
        let mut state = SimState::at_rest(&tree, Vector3::new(0.1, -0.2, 0.29), tree.q_default.clone());
        state.base_orientation = UnitQuaternion::from_euler_angles(0.1, 0.05, -0.3);
        state.base_linear_velocity = Vector3::new(0.3, -0.2, 0.1);
        state.base_angular_velocity = Vector3::new(-0.4, 0.6, 0.2);
        for i in 0..12 {
            state.q[i] += 0.05 * (i as f64).sin();
            state.qdot[i] = (i as f64 * 0.7).cos() * 2.0;
        }
        let tau: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).sin() * 5.0).collect();
        let ext = [ExternalForce { body: 0, force: Vector3::new(40.0, -20.0, 5.0), application_point: Vector3::new(0.1, -0.2, 0.32) }];
        let acc = forward_dynamics(&tree, &state, &tau, &ext).unwrap();
        let (base_wrench, tau_back) = inverse_dynamics(&tree, &state, &acc, &ext).unwrap();
        assert!(base_wrench.norm() < 1e-8, "{base_wrench:?}");
        for (a, b) in tau.iter().zip(&tau_back) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn wrench_response_is_superposable() {
        let tree = KinematicTree::default_quadruped();
        let mut state = SimState::at_rest(&tree, Vector3::new(0.0, 0.0, 0.8), tree.q_default.clone());
        state.base_angular_velocity = Vector3::new(0.3, -0.5, 0.2);
        state.qdot = (0..12).map(|i| (i as f64).cos()).collect();
        let frames = BodyFrames::compute(&tree, &state);
        let tau: Vec<f64> = (0..12).map(|i| (i as f64 * 0.4).sin() * 4.0).collect();
        let mut wrenches = body_wrenches(&tree, &frames, &[Vector3::zeros(); 4], &[Vector3::zeros(); 4], &[]);
        let art = Articulated::new(&tree, &state, &frames, &tau, &wrenches);
        let extra = spatial(&Vector3::new(0.2, -0.1, 0.3), &Vector3::new(5.0, -3.0, 7.0));
        let (_, delta) = art.response(&tree, &frames, 9, &extra);
        wrenches[9] += extra;
        let full = articulated_body(&tree, &state, &frames, &tau, &wrenches);
        let combined: Vec<f64> =
            art.acceleration.to_vec().iter().zip(delta.to_vec()).map(|(a, d)| a + d).collect();
        for (a, b) in combined.iter().zip(full.to_vec()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_non_finite_torque() {
        let tree = KinematicTree::default_quadruped();
        let state = SimState::at_rest(&tree, Vector3::new(0.0, 0.0, 1.0), tree.q_default.clone());
        let mut tau = [0.0; 12];
        tau[7] = f64::NAN;
        match forward_dynamics(&tree, &state, &tau, &[]) {
            Err(PhysicsError::NonFinite { what: "tau", index: 7, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
