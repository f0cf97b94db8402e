//! Small models shared by the physics unit tests.

use nalgebra::{Matrix3, Vector3};

use super::model::{BaseKind, Body, ContactParams, Geometry, JointKind, JointSpec, KinematicTree, SpatialInertia};

/// Point-mass pendulum about a fixed pivot, swinging about y.
pub(crate) fn pendulum(length: f64, mass: f64) -> KinematicTree {
    let base = Body {
        name: "pivot".into(),
        inertia: SpatialInertia::new(1.0, Vector3::zeros(), Matrix3::identity()).unwrap(),
        geometry: Geometry::None,
    };
    let bob = Body {
        name: "bob".into(),
        inertia: SpatialInertia::new(mass, Vector3::new(0.0, 0.0, -length), Matrix3::identity() * 1e-14).unwrap(),
        geometry: Geometry::None,
    };
    let joint = JointSpec {
        kind: JointKind::Revolute,
        axis: Vector3::y(),
        parent_body: 0,
        origin: Vector3::zeros(),
        position_limit: [-10.0, 10.0],
        velocity_limit: 100.0,
        torque_limit: 100.0,
        armature: 0.0,
    };
    let contact = ContactParams { normal_stiffness: 0.0, normal_damping: 0.0, tangential_damping: 0.0, friction: 0.0 };
    KinematicTree::new(
        BaseKind::Fixed,
        vec![base, bob],
        vec![joint],
        vec![],
        vec![],
        vec![],
        contact,
        Vector3::new(0.0, 0.0, -9.81),
        vec![0.0],
    )
    .unwrap()
}
