//! Penalty ground contact between point feet and the plane z = 0.

use nalgebra::{Matrix3, Vector3};

use super::kinematics::{BodyFrames, KinematicsOutput};
use super::model::{ContactParams, KinematicTree};
use super::state::SimState;

/// Force on a foot that penetrates the floor by `depth` (> 0) while moving
/// with world `velocity`.
///
/// Normal: `k_n·depth + c_n·max(0, −v_z)`. Tangential: viscous `−k_t·v_xy`
/// clamped to the Coulomb cone `μ·normal`.
pub fn penalty_contact_force(depth: f64, velocity: &Vector3<f64>, params: &ContactParams, friction: f64) -> Vector3<f64> {
    if depth <= 0.0 {
        return Vector3::zeros();
    }
    let normal = (params.normal_stiffness * depth + params.normal_damping * (-velocity.z).max(0.0)).max(0.0);
    let mut tangential = Vector3::new(-params.tangential_damping * velocity.x, -params.tangential_damping * velocity.y, 0.0);
    let limit = friction * normal;
    let magnitude = tangential.norm();
    if magnitude > limit {
        tangential *= if magnitude > 0.0 { limit / magnitude } else { 0.0 };
    }
    Vector3::new(tangential.x, tangential.y, normal)
}

/// Ground reaction force on every foot, world coordinates.
pub fn contact_forces(tree: &KinematicTree, state: &SimState, friction_coefficient: f64) -> Vec<Vector3<f64>> {
    let frames = BodyFrames::compute(tree, state);
    let kin = super::kinematics::kinematics_from_frames(tree, state, &frames);
    forces_from_kinematics(tree, &kin, friction_coefficient).0
}

pub(crate) fn forces_from_kinematics(
    tree: &KinematicTree,
    kin: &KinematicsOutput,
    friction: f64,
) -> (Vec<Vector3<f64>>, Vec<bool>) {
    let mut forces = Vec::with_capacity(tree.feet.len());
    let mut flags = Vec::with_capacity(tree.feet.len());
    for (i, foot) in tree.feet.iter().enumerate() {
        let depth = foot.radius - kin.foot_positions[i].z;
        flags.push(depth > 0.0);
        forces.push(penalty_contact_force(depth, &kin.foot_velocities[i], &tree.contact, friction));
    }
    (forces, flags)
}

/// Evaluates the penalty law at the end-of-step foot velocities.
///
/// `free_velocity[i]` is the velocity foot `i` would reach in one step
/// without contact, and `coupling[i][j]` maps a world force on foot `j` to the
/// rate of change of foot `i`'s velocity. The viscous terms are stiff
/// relative to a foot's effective mass, so evaluating them at the current
/// velocity would overshoot; solving for the force consistent with the
/// velocity it produces keeps them dissipative. Coupled feet are resolved by
/// Gauss–Seidel sweeps.
pub fn implicit_contact_forces(
    depths: &[f64],
    free_velocity: &[Vector3<f64>],
    coupling: &[Vec<Matrix3<f64>>],
    params: &ContactParams,
    friction: f64,
    dt: f64,
) -> Vec<Vector3<f64>> {
    let n = depths.len();
    let mut forces = vec![Vector3::zeros(); n];
    for _ in 0..MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..n {
            if depths[i] <= 0.0 {
                continue;
            }
            let mut b = free_velocity[i];
            for j in (0..n).filter(|&j| j != i) {
                b += coupling[i][j] * forces[j] * dt;
            }
            let f = local_solve(depths[i], &b, &coupling[i][i], params, friction, dt);
            change = change.max((f - forces[i]).amax());
            forces[i] = f;
        }
        if change < SWEEP_TOLERANCE {
            break;
        }
    }
    forces
}

const MAX_SWEEPS: usize = 30;
const SWEEP_TOLERANCE: f64 = 1e-9;

/// One foot with the others held fixed: end velocity is `b + dt·a·f`.
fn local_solve(
    depth: f64,
    b: &Vector3<f64>,
    a: &Matrix3<f64>,
    params: &ContactParams,
    friction: f64,
    dt: f64,
) -> Vector3<f64> {
    let spring = Vector3::new(0.0, 0.0, params.normal_stiffness * depth);
    let solve = |normal_damping: f64| {
        let k = Matrix3::from_diagonal(&Vector3::new(params.tangential_damping, params.tangential_damping, normal_damping));
        (Matrix3::identity() + k * a * dt)
            .lu()
            .solve(&(spring - k * b))
            .unwrap_or(spring)
    };
    let mut f = solve(params.normal_damping);
    if (b + a * f * dt).z > 0.0 {
        // Separating: normal damping only acts on approach.
        f = solve(0.0);
    }
    let limit = friction * f.z.max(0.0);
    let t = f.xy().norm();
    if t > limit {
        // Sliding: keep the tangential direction, re-solve the normal
        // magnitude with the tangential force pinned to the cone.
        let dir = if t > 0.0 { f.xy() / t } else { f.xy() * 0.0 };
        let mut normal = f.z.max(0.0);
        for _ in 0..3 {
            let tx = friction * normal * dir.x;
            let ty = friction * normal * dir.y;
            let vz_without_normal = b.z + dt * (a[(2, 0)] * tx + a[(2, 1)] * ty);
            let vz = vz_without_normal + dt * a[(2, 2)] * normal;
            normal = if vz < 0.0 {
                ((spring.z - params.normal_damping * vz_without_normal) / (1.0 + dt * params.normal_damping * a[(2, 2)]))
                    .max(spring.z)
            } else {
                spring.z
            };
        }
        f = Vector3::new(friction * normal * dir.x, friction * normal * dir.y, normal);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ContactParams {
        ContactParams { normal_stiffness: 30000.0, normal_damping: 300.0, tangential_damping: 3000.0, friction: 1.0 }
    }

    #[test]
    fn no_force_above_floor() {
        let f = penalty_contact_force(-0.002, &Vector3::zeros(), &params(), 1.0);
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn static_penetration_is_spring_force() {
        let f = penalty_contact_force(0.001, &Vector3::zeros(), &params(), 1.0);
        assert!((f.z - 30.0).abs() < 1e-9);
        assert_eq!((f.x, f.y), (0.0, 0.0));
    }

    #[test]
    fn sliding_is_clamped_to_cone() {
        // 100 N tangential demand at 50 N normal, μ = 0.5.
        let p = params();
        let depth = 50.0 / p.normal_stiffness;
        let v = Vector3::new(100.0 / p.tangential_damping, 0.0, 0.0);
        let f = penalty_contact_force(depth, &v, &p, 0.5);
        assert!((f.z - 50.0).abs() < 1e-9);
        assert!((f.xy().norm() - 25.0).abs() < 1e-9);
        assert!(f.x < 0.0);
    }

    #[test]
    fn implicit_friction_does_not_reverse_a_light_foot() {
        // 0.2 kg effective mass: explicit k_t·dt/m = 30, far past stability.
        let p = params();
        let dt = 0.002;
        let a = Matrix3::identity() * 5.0;
        let depth = 0.002;
        let v = Vector3::new(0.3, 0.0, 0.0);
        let f = implicit_contact_forces(&[depth], &[v], &[vec![a]], &p, 1.0, dt)[0];
        let v_next = v + a * f * dt;
        assert!(v_next.x >= -1e-12 && v_next.x < v.x);
        // Exactly the viscous law at the end velocity while inside the cone.
        assert!((f.x + p.tangential_damping * v_next.x).abs() < 1e-9);
    }

    #[test]
    fn implicit_sliding_respects_cone() {
        let p = params();
        let a = Matrix3::identity() * 2.0;
        let f = implicit_contact_forces(&[0.001], &[Vector3::new(5.0, 0.0, 0.0)], &[vec![a]], &p, 0.5, 0.002)[0];
        assert!((f.xy().norm() - 0.5 * f.z).abs() < 1e-9);
        assert!(f.x < 0.0);
    }

    #[test]
    fn implicit_force_is_zero_without_penetration() {
        let a = Matrix3::identity();
        let f = implicit_contact_forces(&[-0.01], &[Vector3::new(0.0, 0.0, -1.0)], &[vec![a]], &params(), 1.0, 0.002);
        assert_eq!(f[0], Vector3::zeros());
    }

    #[test]
    fn separating_foot_is_not_pulled() {
        let f = penalty_contact_force(0.001, &Vector3::new(0.0, 0.0, 5.0), &params(), 1.0);
        assert!((f.z - 30.0).abs() < 1e-9);
    }
}
