//! Floating-base rigid-body simulation of the quadruped on a flat floor.

pub mod contact;
pub mod dynamics;
#[cfg(test)]
mod fixtures;
pub mod integrate;
pub mod kinematics;
pub mod model;
pub mod spatial;
pub mod state;

pub use contact::{contact_forces, penalty_contact_force};
pub use dynamics::{forward_dynamics, inverse_dynamics, GeneralizedAcceleration};
pub use integrate::{refresh_contacts, step};
pub use kinematics::{kinematics, mechanical_energy, BodyFrames, KinematicsOutput};
pub use model::{
    joint_index, BaseKind, Body, ContactParams, Foot, Geometry, JointKind, JointSpec, KinematicTree, ModelConfig,
    SpatialInertia, JOINTS_PER_LEG, JOINT_GROUP_NAMES, LEG_NAMES, NUM_JOINTS, NUM_LEGS,
};
pub use state::{ExternalForce, SimState};
