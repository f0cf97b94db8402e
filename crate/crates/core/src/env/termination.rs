//! Episode termination and truncation.

use serde::{Deserialize, Serialize};

use crate::physics::kinematics::body_clearances;
use crate::physics::{BodyFrames, KinematicTree, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    /// Physics blew up; the state is not trustworthy.
    Divergence,
    /// Tilted 90° or more.
    Orientation,
    /// Trunk or a hip touches the floor.
    IllegalContact,
    /// A joint reached a position limit.
    JointLimit,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Divergence => "divergence",
            Self::Orientation => "orientation",
            Self::IllegalContact => "illegal_contact",
            Self::JointLimit => "joint_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpisodeStatus {
    Running,
    Terminated(TerminationReason),
    /// Time limit reached while healthy.
    Truncated,
}

impl EpisodeStatus {
    pub fn is_done(self) -> bool {
        self != Self::Running
    }

    pub fn is_terminated(self) -> bool {
        matches!(self, Self::Terminated(_))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Running => "running",
            Self::Terminated(r) => r.name(),
            Self::Truncated => "truncated",
        }
    }
}

/// Status after `step_count` control steps. Failure takes precedence over
/// the time limit; among failures the first matching check wins
/// (orientation, illegal contact, joint limit).
pub fn check_termination(tree: &KinematicTree, state: &SimState, step_count: usize, max_steps: usize) -> EpisodeStatus {
    let g_z = state.base_orientation.inverse_transform_vector(&-nalgebra::Vector3::z()).z;
    if g_z >= 0.0 {
        return EpisodeStatus::Terminated(TerminationReason::Orientation);
    }
    let frames = BodyFrames::compute(tree, state);
    if body_clearances(tree, &frames, &tree.illegal_contact_bodies).iter().any(|c| *c < 0.0) {
        return EpisodeStatus::Terminated(TerminationReason::IllegalContact);
    }
    let at_limit = tree.joints.iter().zip(&state.q).any(|(j, q)| *q <= j.position_limit[0] || *q >= j.position_limit[1]);
    if at_limit {
        return EpisodeStatus::Terminated(TerminationReason::JointLimit);
    }
    if step_count >= max_steps {
        EpisodeStatus::Truncated
    } else {
        EpisodeStatus::Running
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};
    use std::f64::consts::PI;

    fn standing() -> (KinematicTree, SimState) {
        let tree = KinematicTree::default_quadruped();
        let state = SimState::at_rest(&tree, Vector3::new(0.0, 0.0, 0.3), tree.q_default.clone());
        (tree, state)
    }

    #[test]
    fn healthy_runs_then_truncates() {
        let (tree, state) = standing();
        assert_eq!(check_termination(&tree, &state, 10, 1000), EpisodeStatus::Running);
        assert_eq!(check_termination(&tree, &state, 1000, 1000), EpisodeStatus::Truncated);
    }

    #[test]
    fn upside_down_terminates() {
        let (tree, mut state) = standing();
        state.base_position.z = 1.0;
        state.base_orientation = UnitQuaternion::from_euler_angles(PI, 0.0, 0.0);
        assert_eq!(check_termination(&tree, &state, 1000, 1000), EpisodeStatus::Terminated(TerminationReason::Orientation));
    }

    #[test]
    fn trunk_on_floor_terminates() {
        let (tree, mut state) = standing();
        state.base_position.z = 0.03;
        assert_eq!(check_termination(&tree, &state, 3, 1000), EpisodeStatus::Terminated(TerminationReason::IllegalContact));
    }

    #[test]
    fn joint_at_stop_terminates() {
        let (tree, mut state) = standing();
        state.q[5] = tree.joints[5].position_limit[1];
        assert_eq!(check_termination(&tree, &state, 3, 1000), EpisodeStatus::Terminated(TerminationReason::JointLimit));
    }
}
