//! The 18 reward terms and their weighted sum `r = Σ wᵢ·rᵢ·dt`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::command::CommandVector;
use super::config::EnvConfig;
use crate::actuation::GainState;
use crate::physics::kinematics::{body_clearances, kinematics_from_frames};
use crate::physics::{joint_index, BodyFrames, KinematicTree, SimState, NUM_JOINTS, NUM_LEGS};

pub const NUM_TERMS: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardTerm {
    LinVelTracking,
    AngVelTracking,
    LinVelZ,
    AngVelXy,
    Orientation,
    FeetAirTime,
    JointAcceleration,
    JointPower,
    PowerDistribution,
    FootSlip,
    ActionRate,
    FootClearance,
    CenterOfMass,
    JointTracking,
    BaseHeight,
    Hip,
    Collisions,
    Termination,
}

impl RewardTerm {
    pub const ALL: [RewardTerm; NUM_TERMS] = [
        Self::LinVelTracking,
        Self::AngVelTracking,
        Self::LinVelZ,
        Self::AngVelXy,
        Self::Orientation,
        Self::FeetAirTime,
        Self::JointAcceleration,
        Self::JointPower,
        Self::PowerDistribution,
        Self::FootSlip,
        Self::ActionRate,
        Self::FootClearance,
        Self::CenterOfMass,
        Self::JointTracking,
        Self::BaseHeight,
        Self::Hip,
        Self::Collisions,
        Self::Termination,
    ];

    /// Snake-case name, shared by config keys and CSV columns.
    pub fn name(self) -> &'static str {
        match self {
            Self::LinVelTracking => "lin_vel_tracking",
            Self::AngVelTracking => "ang_vel_tracking",
            Self::LinVelZ => "lin_vel_z",
            Self::AngVelXy => "ang_vel_xy",
            Self::Orientation => "orientation",
            Self::FeetAirTime => "feet_air_time",
            Self::JointAcceleration => "joint_acceleration",
            Self::JointPower => "joint_power",
            Self::PowerDistribution => "power_distribution",
            Self::FootSlip => "foot_slip",
            Self::ActionRate => "action_rate",
            Self::FootClearance => "foot_clearance",
            Self::CenterOfMass => "center_of_mass",
            Self::JointTracking => "joint_tracking",
            Self::BaseHeight => "base_height",
            Self::Hip => "hip",
            Self::Collisions => "collisions",
            Self::Termination => "termination",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub lin_vel_z: f64,
    pub ang_vel_xy: f64,
    pub orientation: f64,
    pub feet_air_time: f64,
    pub joint_acceleration: f64,
    pub joint_power: f64,
    pub power_distribution: f64,
    pub foot_slip: f64,
    pub action_rate: f64,
    pub foot_clearance: f64,
    pub center_of_mass: f64,
    pub joint_tracking: f64,
    pub base_height: f64,
    pub hip: f64,
    pub collisions: f64,
    pub termination: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lin_vel_tracking: 1.5,
            ang_vel_tracking: 0.8,
            lin_vel_z: -2.0,
            ang_vel_xy: -0.05,
            orientation: -5.0,
            feet_air_time: 0.2,
            joint_acceleration: -2.5e-7,
            joint_power: -2e-5,
            power_distribution: -1e-5,
            foot_slip: -0.1,
            action_rate: -0.01,
            foot_clearance: -0.1,
            center_of_mass: -1.0,
            joint_tracking: -0.1,
            base_height: -0.6,
            hip: 0.05,
            collisions: -10.0,
            termination: -10.0,
        }
    }
}

impl RewardWeights {
    /// Weights in [`RewardTerm::ALL`] order.
    pub fn as_array(&self) -> [f64; NUM_TERMS] {
        [
            self.lin_vel_tracking,
            self.ang_vel_tracking,
            self.lin_vel_z,
            self.ang_vel_xy,
            self.orientation,
            self.feet_air_time,
            self.joint_acceleration,
            self.joint_power,
            self.power_distribution,
            self.foot_slip,
            self.action_rate,
            self.foot_clearance,
            self.center_of_mass,
            self.joint_tracking,
            self.base_height,
            self.hip,
            self.collisions,
            self.termination,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Unweighted `rᵢ`.
    pub raw: [f64; NUM_TERMS],
    /// `wᵢ·rᵢ·dt`.
    pub weighted: [f64; NUM_TERMS],
    pub total: f64,
}

impl RewardBreakdown {
    pub fn combine(raw: [f64; NUM_TERMS], weights: &RewardWeights, dt: f64) -> Self {
        let w = weights.as_array();
        let weighted: [f64; NUM_TERMS] = std::array::from_fn(|i| w[i] * raw[i] * dt);
        let total = weighted.iter().sum();
        Self { raw, weighted, total }
    }

    pub fn raw_of(&self, term: RewardTerm) -> f64 {
        self.raw[term.index()]
    }

    pub fn weighted_of(&self, term: RewardTerm) -> f64 {
        self.weighted[term.index()]
    }
}

/// Per-foot airborne time, credited when the foot touches down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeetAirTime {
    pub air_time: [f64; NUM_LEGS],
    pub in_contact: [bool; NUM_LEGS],
}

impl FeetAirTime {
    pub fn new(in_contact: [bool; NUM_LEGS]) -> Self {
        Self { air_time: [0.0; NUM_LEGS], in_contact }
    }

    /// Advances by one control step ending with `contacts`; returns the
    /// completed air time of every foot that touched down in this step.
    pub fn update(&mut self, contacts: [bool; NUM_LEGS], dt: f64) -> [Option<f64>; NUM_LEGS] {
        std::array::from_fn(|f| {
            let touchdown = contacts[f] && !self.in_contact[f];
            let credit = touchdown.then_some(self.air_time[f]);
            if contacts[f] {
                self.air_time[f] = 0.0;
            } else {
                self.air_time[f] += dt;
            }
            self.in_contact[f] = contacts[f];
            credit
        })
    }
}

/// Quantities that are not functions of the two states alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSignals {
    pub command: CommandVector,
    /// Per-joint `|τ|·|q̇|`, averaged over the physics steps of the control step.
    pub joint_power: [f64; NUM_JOINTS],
    pub touchdowns: [Option<f64>; NUM_LEGS],
    pub terminated: bool,
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Every reward term for the control step `prev_state → state`.
#[allow(clippy::too_many_arguments)]
pub fn reward_terms(
    tree: &KinematicTree,
    prev_state: &SimState,
    state: &SimState,
    action: &[f64],
    prev_action: &[f64],
    gains: &GainState,
    signals: &StepSignals,
    config: &EnvConfig,
) -> RewardBreakdown {
    let dt = config.control_dt;
    let frames = BodyFrames::compute(tree, state);
    let kin = kinematics_from_frames(tree, state, &frames);
    let v = state.local_linear_velocity();
    let w = state.local_angular_velocity();
    let g = kin.projected_gravity;
    let cmd = signals.command;

    let mut r = [0.0; NUM_TERMS];
    let mut set = |t: RewardTerm, value: f64| r[t.index()] = value;

    set(RewardTerm::LinVelTracking, (-4.0 * (sq(cmd.v_xy[0] - v.x) + sq(cmd.v_xy[1] - v.y))).exp());
    set(RewardTerm::AngVelTracking, (-4.0 * sq(cmd.omega_yaw - w.z)).exp());
    set(RewardTerm::LinVelZ, sq(v.z));
    set(RewardTerm::AngVelXy, sq(w.x) + sq(w.y));
    set(RewardTerm::Orientation, sq(g.x) + sq(g.y));

    let air = if cmd.planar_speed() > 0.1 {
        signals.touchdowns.iter().flatten().map(|t| t - 0.1).sum()
    } else {
        0.0
    };
    set(RewardTerm::FeetAirTime, air);

    let qdd: f64 = state.qdot.iter().zip(&prev_state.qdot).map(|(a, b)| sq((a - b) / dt)).sum();
    set(RewardTerm::JointAcceleration, qdd);
    let power = &signals.joint_power;
    let mean_power = power.iter().sum::<f64>() / NUM_JOINTS as f64;
    set(RewardTerm::JointPower, power.iter().sum());
    set(RewardTerm::PowerDistribution, power.iter().map(|p| sq(p - mean_power)).sum::<f64>() / NUM_JOINTS as f64);

    let feet = kin.foot_positions.iter().zip(&kin.foot_velocities);
    let slip = feet.clone().filter(|(p, _)| p.z < config.foot_slip_height).map(|(_, v)| v.xy().norm_squared()).sum();
    set(RewardTerm::FootSlip, slip);
    set(RewardTerm::ActionRate, action.iter().zip(prev_action).map(|(a, b)| sq(a - b)).sum());
    let clearance = feet.map(|(p, v)| sq(config.foot_clearance_target - p.z) * v.xy().norm()).sum();
    set(RewardTerm::FootClearance, clearance);

    let centroid: Vector3<f64> = kin.foot_positions.iter().sum::<Vector3<f64>>() / kin.foot_positions.len() as f64;
    set(RewardTerm::CenterOfMass, (kin.com_position.xy() - centroid.xy()).norm_squared());
    set(RewardTerm::JointTracking, gains.q_target.iter().zip(&state.q).map(|(t, q)| sq(t - q)).sum());
    set(RewardTerm::BaseHeight, sq(config.base_height_target - state.base_position.z));
    let hip: f64 = (0..NUM_LEGS)
        .map(|l| {
            let j = joint_index(l, 0);
            sq(state.q[j] - tree.q_default[j])
        })
        .sum();
    set(RewardTerm::Hip, (-4.0 * hip).exp());
    let collisions = body_clearances(tree, &frames, &tree.penalized_contact_bodies).iter().filter(|c| **c < 0.0).count();
    set(RewardTerm::Collisions, collisions as f64);
    set(RewardTerm::Termination, if signals.terminated { 1.0 } else { 0.0 });

    RewardBreakdown::combine(r, &config.rewards, dt)
}
