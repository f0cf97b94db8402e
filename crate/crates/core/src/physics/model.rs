//! Articulated model description: bodies, joints, feet and the quadruped
//! builder driven by a TOML model file.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::spatial::{rigid_body_inertia, SpatialMatrix};
use crate::error::{ConfigError, PhysicsError};

pub const NUM_LEGS: usize = 4;
pub const JOINTS_PER_LEG: usize = 3;
pub const NUM_JOINTS: usize = NUM_LEGS * JOINTS_PER_LEG;
pub const LEG_NAMES: [&str; NUM_LEGS] = ["FR", "FL", "RR", "RL"];
pub const JOINT_GROUP_NAMES: [&str; JOINTS_PER_LEG] = ["hip", "thigh", "knee"];

/// Joint index for `leg` (FR, FL, RR, RL) and `group` (hip, thigh, knee).
#[inline]
pub const fn joint_index(leg: usize, group: usize) -> usize {
    leg * JOINTS_PER_LEG + group
}

/// The default model shipped with the crate.
pub const DEFAULT_MODEL_TOML: &str = include_str!("../../configs/quadruped.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialInertia {
    pub mass: f64,
    pub com_offset: Vector3<f64>,
    /// About the centre of mass, body axes.
    pub rotational_inertia: Matrix3<f64>,
}

impl SpatialInertia {
    pub fn new(mass: f64, com_offset: Vector3<f64>, rotational_inertia: Matrix3<f64>) -> Result<Self, PhysicsError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(PhysicsError::InvalidModel(format!("body mass must be positive, got {mass}")));
        }
        let asym = (rotational_inertia - rotational_inertia.transpose()).abs().max();
        if asym > 1e-12 || rotational_inertia.cholesky().is_none() {
            return Err(PhysicsError::InvalidModel(
                "rotational inertia must be symmetric positive definite".into(),
            ));
        }
        Ok(Self { mass, com_offset, rotational_inertia })
    }

    pub fn to_matrix(&self) -> SpatialMatrix {
        rigid_body_inertia(self.mass, &self.com_offset, &self.rotational_inertia)
    }
}

/// Collision geometry in body coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    None,
    Box { half_extents: Vector3<f64> },
    Sphere { center: Vector3<f64>, radius: f64 },
    Capsule { from: Vector3<f64>, to: Vector3<f64>, radius: f64 },
}

impl Geometry {
    /// Height of the lowest point of the shape for a body at `position` with
    /// body-to-world `rotation`. `None` for shapeless bodies.
    pub fn lowest_point(&self, rotation: &Matrix3<f64>, position: &Vector3<f64>) -> Option<f64> {
        match self {
            Geometry::None => None,
            Geometry::Box { half_extents } => {
                // Support function along −z.
                let down = rotation.transpose() * Vector3::new(0.0, 0.0, 1.0);
                let extent = half_extents.x * down.x.abs() + half_extents.y * down.y.abs() + half_extents.z * down.z.abs();
                Some(position.z - extent)
            }
            Geometry::Sphere { center, radius } => Some((position + rotation * center).z - radius),
            Geometry::Capsule { from, to, radius } => {
                let a = (position + rotation * from).z;
                let b = (position + rotation * to).z;
                Some(a.min(b) - radius)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointKind {
    Revolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    /// Unit axis, shared by the parent and child frames.
    pub axis: Vector3<f64>,
    pub parent_body: usize,
    /// Joint origin in the parent body frame.
    pub origin: Vector3<f64>,
    pub position_limit: [f64; 2],
    pub velocity_limit: f64,
    pub torque_limit: f64,
    /// Reflected rotor inertia about the joint axis.
    pub armature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub name: String,
    pub inertia: SpatialInertia,
    pub geometry: Geometry,
}

/// Contact point attached to a body.
#[derive(Debug, Clone, PartialEq)]
pub struct Foot {
    pub body: usize,
    pub offset: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// N/m
    pub normal_stiffness: f64,
    /// N·s/m
    pub normal_damping: f64,
    /// N·s/m
    pub tangential_damping: f64,
    pub friction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    /// Six-DoF unactuated trunk.
    Floating,
    /// Base welded to the world at the state's base pose.
    Fixed,
}

/// Tree of rigid bodies. Body 0 is the base; body `j + 1` is the child of
/// joint `j`, and every joint's parent precedes its child.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    pub base: BaseKind,
    pub bodies: Vec<Body>,
    pub joints: Vec<JointSpec>,
    pub feet: Vec<Foot>,
    /// Bodies whose floor contact ends an episode.
    pub illegal_contact_bodies: Vec<usize>,
    /// Bodies whose floor contact is penalized but tolerated.
    pub penalized_contact_bodies: Vec<usize>,
    pub contact: ContactParams,
    pub gravity: Vector3<f64>,
    pub q_default: Vec<f64>,
    inertia_cache: Vec<SpatialMatrix>,
}

impl KinematicTree {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        base: BaseKind,
        bodies: Vec<Body>,
        joints: Vec<JointSpec>,
        feet: Vec<Foot>,
        illegal_contact_bodies: Vec<usize>,
        penalized_contact_bodies: Vec<usize>,
        contact: ContactParams,
        gravity: Vector3<f64>,
        q_default: Vec<f64>,
    ) -> Result<Self, PhysicsError> {
        let mut tree = Self {
            base,
            bodies,
            joints,
            feet,
            illegal_contact_bodies,
            penalized_contact_bodies,
            contact,
            gravity,
            q_default,
            inertia_cache: Vec::new(),
        };
        tree.validate()?;
        tree.refresh_inertias();
        Ok(tree)
    }

    fn validate(&self) -> Result<(), PhysicsError> {
        let bad = |m: String| Err(PhysicsError::InvalidModel(m));
        if self.bodies.len() != self.joints.len() + 1 {
            return bad(format!("{} bodies for {} joints; need one base plus one body per joint", self.bodies.len(), self.joints.len()));
        }
        for (j, joint) in self.joints.iter().enumerate() {
            if joint.parent_body > j {
                return bad(format!("joint {j} has parent body {} which does not precede child body {}", joint.parent_body, j + 1));
            }
            if ((joint.axis.norm() - 1.0).abs()) > 1e-9 {
                return bad(format!("joint {j} axis is not unit length"));
            }
            if !(joint.position_limit[0] < joint.position_limit[1]) {
                return bad(format!("joint {j} position limits are not increasing"));
            }
            if !(joint.velocity_limit > 0.0) || !(joint.torque_limit > 0.0) || joint.armature < 0.0 {
                return bad(format!("joint {j} limits must be positive"));
            }
        }
        for foot in &self.feet {
            if foot.body >= self.bodies.len() {
                return bad(format!("foot attached to missing body {}", foot.body));
            }
        }
        for &b in self.illegal_contact_bodies.iter().chain(&self.penalized_contact_bodies) {
            if b >= self.bodies.len() {
                return bad(format!("collision body {b} does not exist"));
            }
        }
        if self.q_default.len() != self.joints.len() {
            return bad("default pose length differs from the joint count".into());
        }
        if self.contact.friction < 0.0 || self.contact.normal_stiffness < 0.0 {
            return bad("contact constants must be non-negative".into());
        }
        Ok(())
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.inertia.mass).sum()
    }

    pub(crate) fn spatial_inertia(&self, body: usize) -> &SpatialMatrix {
        &self.inertia_cache[body]
    }

    fn refresh_inertias(&mut self) {
        self.inertia_cache = self.bodies.iter().map(|b| b.inertia.to_matrix()).collect();
    }

    /// Adds `delta` kg at the body's centre of mass.
    pub fn add_mass(&mut self, body: usize, delta: f64) -> Result<(), PhysicsError> {
        let new_mass = self.bodies[body].inertia.mass + delta;
        if !(new_mass > 0.0) {
            return Err(PhysicsError::InvalidModel(format!("mass of {} would become {new_mass}", self.bodies[body].name)));
        }
        self.bodies[body].inertia.mass = new_mass;
        self.inertia_cache[body] = self.bodies[body].inertia.to_matrix();
        Ok(())
    }

    pub fn torque_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.torque_limit).collect()
    }

    pub fn position_limits(&self) -> Vec<[f64; 2]> {
        self.joints.iter().map(|j| j.position_limit).collect()
    }

    pub fn from_model_config(config: &ModelConfig) -> Result<Self, PhysicsError> {
        config.build()
    }

    /// The crate's default 12-DoF quadruped.
    pub fn default_quadruped() -> Self {
        ModelConfig::default_model().build().expect("bundled model is valid")
    }

    /// Whether this tree has the quadruped layout the environment expects.
    pub fn is_quadruped(&self) -> bool {
        self.base == BaseKind::Floating && self.joints.len() == NUM_JOINTS && self.feet.len() == NUM_LEGS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrunkConfig {
    pub mass: f64,
    /// Full box dimensions (x, y, z).
    pub size: [f64; 3],
    pub com_offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub hip_mass: f64,
    pub thigh_mass: f64,
    pub calf_mass: f64,
    /// Hip joint of the front-left leg in the trunk frame; the other legs mirror it.
    pub hip_position: [f64; 3],
    pub hip_radius: f64,
    /// Lateral offset from the hip joint to the thigh joint.
    pub thigh_offset: f64,
    pub thigh_length: f64,
    pub calf_length: f64,
    pub link_radius: f64,
    pub foot_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub hip_limit: [f64; 2],
    pub thigh_limit: [f64; 2],
    pub knee_limit: [f64; 2],
    pub torque_limit: f64,
    pub velocity_limit: f64,
    pub armature: f64,
    /// (hip, thigh, knee), shared by every leg.
    pub default_pose: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub gravity: f64,
    pub trunk: TrunkConfig,
    pub leg: LegConfig,
    pub joints: JointConfig,
    pub contact: ContactParams,
}

impl ModelConfig {
    pub fn default_model() -> Self {
        Self::from_toml_str(DEFAULT_MODEL_TOML, "<bundled quadruped.toml>").expect("bundled model parses")
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::from_toml(origin, e))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Trunk centre-of-mass x offset that puts the whole-robot centre of mass
    /// over the centroid of the feet in the default stance.
    pub fn calibrated_trunk_com_x(&self) -> Result<f64, PhysicsError> {
        let mut probe = self.clone();
        probe.trunk.com_offset[0] = 0.0;
        let tree = probe.build()?;
        let state = super::state::SimState::at_rest(&tree, Vector3::zeros(), tree.q_default.clone());
        let kin = super::kinematics::kinematics(&tree, &state);
        let centroid_x = kin.foot_positions.iter().map(|p| p.x).sum::<f64>() / NUM_LEGS as f64;
        Ok((centroid_x - kin.com_position.x) * tree.total_mass() / self.trunk.mass)
    }

    pub fn build(&self) -> Result<KinematicTree, PhysicsError> {
        let t = &self.trunk;
        let l = &self.leg;
        let j = &self.joints;
        let [sx, sy, sz] = t.size;
        let trunk_inertia = Matrix3::from_diagonal(&Vector3::new(
            t.mass * (sy * sy + sz * sz) / 12.0,
            t.mass * (sx * sx + sz * sz) / 12.0,
            t.mass * (sx * sx + sy * sy) / 12.0,
        ));
        let mut bodies = vec![Body {
            name: "trunk".into(),
            inertia: SpatialInertia::new(t.mass, Vector3::from(t.com_offset), trunk_inertia)?,
            geometry: Geometry::Box { half_extents: Vector3::new(sx / 2.0, sy / 2.0, sz / 2.0) },
        }];
        let mut joints = Vec::with_capacity(NUM_JOINTS);
        let mut feet = Vec::with_capacity(NUM_LEGS);
        let mut illegal = vec![0];
        let mut penalized = Vec::new();

        let rod = |mass: f64, length: f64| {
            let r = l.link_radius;
            let lateral = mass * (3.0 * r * r + length * length) / 12.0;
            Matrix3::from_diagonal(&Vector3::new(lateral, lateral, mass * r * r / 2.0))
        };
        let hip_sphere = 0.4 * l.hip_mass * l.hip_radius * l.hip_radius;

        for (leg, name) in LEG_NAMES.iter().enumerate() {
            let front = if leg < 2 { 1.0 } else { -1.0 };
            let side = if leg % 2 == 1 { 1.0 } else { -1.0 };
            let hip_origin = Vector3::new(front * l.hip_position[0], side * l.hip_position[1], l.hip_position[2]);
            let thigh_origin = Vector3::new(0.0, side * l.thigh_offset, 0.0);
            let joint = |axis: Vector3<f64>, parent: usize, origin: Vector3<f64>, limit: [f64; 2]| JointSpec {
                kind: JointKind::Revolute,
                axis,
                parent_body: parent,
                origin,
                position_limit: limit,
                velocity_limit: j.velocity_limit,
                torque_limit: j.torque_limit,
                armature: j.armature,
            };

            let hip_body = bodies.len();
            joints.push(joint(Vector3::x(), 0, hip_origin, j.hip_limit));
            bodies.push(Body {
                name: format!("{name}_hip"),
                inertia: SpatialInertia::new(l.hip_mass, thigh_origin * 0.5, Matrix3::identity() * hip_sphere)?,
                geometry: Geometry::Sphere { center: Vector3::zeros(), radius: l.hip_radius },
            });
            illegal.push(hip_body);

            let thigh_body = bodies.len();
            joints.push(joint(Vector3::y(), hip_body, thigh_origin, j.thigh_limit));
            bodies.push(Body {
                name: format!("{name}_thigh"),
                inertia: SpatialInertia::new(
                    l.thigh_mass,
                    Vector3::new(0.0, 0.0, -l.thigh_length / 2.0),
                    rod(l.thigh_mass, l.thigh_length),
                )?,
                geometry: Geometry::Capsule {
                    from: Vector3::zeros(),
                    to: Vector3::new(0.0, 0.0, -l.thigh_length),
                    radius: l.link_radius,
                },
            });
            penalized.push(thigh_body);

            let calf_body = bodies.len();
            joints.push(joint(Vector3::y(), thigh_body, Vector3::new(0.0, 0.0, -l.thigh_length), j.knee_limit));
            bodies.push(Body {
                name: format!("{name}_calf"),
                inertia: SpatialInertia::new(
                    l.calf_mass,
                    Vector3::new(0.0, 0.0, -l.calf_length / 2.0),
                    rod(l.calf_mass, l.calf_length),
                )?,
                geometry: Geometry::None,
            });
            feet.push(Foot { body: calf_body, offset: Vector3::new(0.0, 0.0, -l.calf_length), radius: l.foot_radius });
        }

        let q_default = (0..NUM_JOINTS).map(|i| j.default_pose[i % JOINTS_PER_LEG]).collect();
        let tree = KinematicTree::new(
            BaseKind::Floating,
            bodies,
            joints,
            feet,
            illegal,
            penalized,
            self.contact,
            Vector3::new(0.0, 0.0, -self.gravity),
            q_default,
        )?;
        debug_assert!(tree.is_quadruped());
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_masses() {
        let tree = KinematicTree::default_quadruped();
        assert_eq!(tree.num_joints(), 12);
        assert_eq!(tree.feet.len(), 4);
        assert!((tree.total_mass() - 18.0).abs() < 1e-12);
        assert_eq!(tree.illegal_contact_bodies.len(), 5);
        assert!(tree.is_quadruped());
    }

    #[test]
    fn bundled_trunk_com_is_calibrated() {
        let config = ModelConfig::default_model();
        let x = config.calibrated_trunk_com_x().unwrap();
        assert!((x - config.trunk.com_offset[0]).abs() < 1e-9, "calibrated value {x:.17}");
    }

    #[test]
    fn rejects_bad_inertia() {
        assert!(SpatialInertia::new(0.0, Vector3::zeros(), Matrix3::identity()).is_err());
        assert!(SpatialInertia::new(1.0, Vector3::zeros(), -Matrix3::identity()).is_err());
    }

    #[test]
    fn rejects_out_of_order_parent() {
        let mut tree = KinematicTree::default_quadruped();
        tree.joints[0].parent_body = 5;
        assert!(tree.validate().is_err());
    }

    #[test]
    fn unknown_config_key_is_reported_with_line() {
        let text = DEFAULT_MODEL_TOML.replace("hip_mass", "hip_mas");
        let err = ModelConfig::from_toml_str(&text, "model.toml").unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn add_mass_keeps_positive() {
        let mut tree = KinematicTree::default_quadruped();
        tree.add_mass(0, 3.0).unwrap();
        assert!((tree.total_mass() - 21.0).abs() < 1e-12);
        assert!(tree.add_mass(1, -5.0).is_err());
    }
}
