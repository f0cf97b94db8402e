use nalgebra::{UnitQuaternion, Vector3};

use super::model::KinematicTree;
use crate::error::PhysicsError;

/// Full dynamic state of a tree. Base velocities are world-frame: the linear
/// part is the velocity of the base origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    pub base_linear_velocity: Vector3<f64>,
    pub base_angular_velocity: Vector3<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub time: f64,
    pub contact_flags: Vec<bool>,
    pub contact_forces: Vec<Vector3<f64>>,
}

impl SimState {
    /// Resting state at `q`, base at `position`, contact fields cleared.
    pub fn at_rest(tree: &KinematicTree, position: Vector3<f64>, q: Vec<f64>) -> Self {
        Self {
            base_position: position,
            base_orientation: UnitQuaternion::identity(),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            qdot: vec![0.0; q.len()],
            q,
            time: 0.0,
            contact_flags: vec![false; tree.feet.len()],
            contact_forces: vec![Vector3::zeros(); tree.feet.len()],
        }
    }

    pub fn check(&self, tree: &KinematicTree) -> Result<(), PhysicsError> {
        let n = tree.num_joints();
        if self.q.len() != n {
            return Err(PhysicsError::Dimension { what: "q", expected: n, actual: self.q.len() });
        }
        if self.qdot.len() != n {
            return Err(PhysicsError::Dimension { what: "qdot", expected: n, actual: self.qdot.len() });
        }
        check_finite("q", &self.q)?;
        check_finite("qdot", &self.qdot)?;
        check_finite("base_position", self.base_position.as_slice())?;
        check_finite("base_linear_velocity", self.base_linear_velocity.as_slice())?;
        check_finite("base_angular_velocity", self.base_angular_velocity.as_slice())?;
        check_finite("base_orientation", self.base_orientation.as_ref().coords.as_slice())?;
        Ok(())
    }

    /// Largest absolute generalized velocity component.
    pub fn max_abs_velocity(&self) -> f64 {
        self.qdot
            .iter()
            .chain(self.base_linear_velocity.iter())
            .chain(self.base_angular_velocity.iter())
            .fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
    }

    /// Base linear velocity in the base frame.
    pub fn local_linear_velocity(&self) -> Vector3<f64> {
        self.base_orientation.inverse_transform_vector(&self.base_linear_velocity)
    }

    /// Base angular velocity in the base frame.
    pub fn local_angular_velocity(&self) -> Vector3<f64> {
        self.base_orientation.inverse_transform_vector(&self.base_angular_velocity)
    }
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<(), PhysicsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(PhysicsError::NonFinite { what, index, value: values[index] }),
        None => Ok(()),
    }
}

/// Point force applied to a body, world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalForce {
    pub body: usize,
    pub force: Vector3<f64>,
    pub application_point: Vector3<f64>,
}

impl ExternalForce {
    pub fn check(&self, tree: &KinematicTree) -> Result<(), PhysicsError> {
        if self.body >= tree.bodies.len() {
            return Err(PhysicsError::InvalidModel(format!("external force on missing body {}", self.body)));
        }
        check_finite("external force", self.force.as_slice())?;
        check_finite("external force point", self.application_point.as_slice())
    }
}
