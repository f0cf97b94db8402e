//! Policy actions to joint targets and impedance gains, and the PD torque law.
//!
//! Every action starts with 12 joint-position entries (offsets about the
//! default pose). Variable-stiffness groupings append stiffness entries:
//!
//! | grouping | extra entries                         | action dim |
//! |----------|---------------------------------------|-----------:|
//! | P20, P50 | none (fixed gain 20 or 50)            | 12 |
//! | IJS      | one per joint                         | 24 |
//! | PJS      | hip, thigh, knee                      | 15 |
//! | PLS      | one per leg (FR, FL, RR, RL)          | 16 |
//! | HJLS     | 4 leg factors, then 3 group factors   | 19 |
//!
//! Damping always follows `kd = 0.2·√kp`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ActuationError;
use crate::physics::{joint_index, JOINTS_PER_LEG, NUM_JOINTS, NUM_LEGS};

pub const KP_MIN: f64 = 20.0;
pub const KP_MAX: f64 = 60.0;
pub const DAMPING_RATIO: f64 = 0.2;
pub const DEFAULT_POSITION_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StiffnessGrouping {
    #[serde(rename = "P20")]
    FixedP20,
    #[serde(rename = "P50")]
    FixedP50,
    #[serde(rename = "IJS")]
    Ijs,
    #[serde(rename = "PJS")]
    Pjs,
    #[serde(rename = "PLS")]
    Pls,
    #[serde(rename = "HJLS")]
    Hjls,
}

impl StiffnessGrouping {
    pub const ALL: [StiffnessGrouping; 6] = [Self::FixedP20, Self::FixedP50, Self::Ijs, Self::Pjs, Self::Pls, Self::Hjls];

    pub fn action_dim(self) -> usize {
        NUM_JOINTS + self.stiffness_dim()
    }

    pub fn stiffness_dim(self) -> usize {
        match self {
            Self::FixedP20 | Self::FixedP50 => 0,
            Self::Ijs => NUM_JOINTS,
            Self::Pjs => JOINTS_PER_LEG,
            Self::Pls => NUM_LEGS,
            Self::Hjls => NUM_LEGS + JOINTS_PER_LEG,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FixedP20 => "P20",
            Self::FixedP50 => "P50",
            Self::Ijs => "IJS",
            Self::Pjs => "PJS",
            Self::Pls => "PLS",
            Self::Hjls => "HJLS",
        }
    }

    pub fn paradigm(self) -> ControlParadigm {
        match self {
            Self::FixedP20 | Self::FixedP50 => ControlParadigm::Fixed,
            _ => ControlParadigm::Variable,
        }
    }

    pub fn fixed_stiffness(self) -> Option<f64> {
        match self {
            Self::FixedP20 => Some(20.0),
            Self::FixedP50 => Some(50.0),
            _ => None,
        }
    }
}

impl fmt::Display for StiffnessGrouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StiffnessGrouping {
    type Err = ActuationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "P20" | "FIXEDP20" => Ok(Self::FixedP20),
            "P50" | "FIXEDP50" => Ok(Self::FixedP50),
            "IJS" => Ok(Self::Ijs),
            "PJS" => Ok(Self::Pjs),
            "PLS" => Ok(Self::Pls),
            "HJLS" => Ok(Self::Hjls),
            _ => Err(ActuationError::UnknownGrouping(s.to_string())),
        }
    }
}

/// Fixed gains (`Kp`, `Kd`) or policy-chosen gains (`Kp(θ)`, `Kd(θ)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlParadigm {
    Fixed,
    Variable,
}

/// Raw policy output, clamped to [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector {
    grouping: StiffnessGrouping,
    raw: Vec<f64>,
}

impl ActionVector {
    pub fn new(grouping: StiffnessGrouping, raw: &[f64]) -> Result<Self, ActuationError> {
        if raw.len() != grouping.action_dim() {
            return Err(ActuationError::ActionLength {
                grouping: grouping.name(),
                expected: grouping.action_dim(),
                actual: raw.len(),
            });
        }
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(ActuationError::NonFinite { what: "action", index, value: raw[index] });
        }
        Ok(Self { grouping, raw: raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect() })
    }

    pub fn zeros(grouping: StiffnessGrouping) -> Self {
        Self { grouping, raw: vec![0.0; grouping.action_dim()] }
    }

    pub fn grouping(&self) -> StiffnessGrouping {
        self.grouping
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainState {
    pub kp: [f64; NUM_JOINTS],
    pub kd: [f64; NUM_JOINTS],
    pub q_target: [f64; NUM_JOINTS],
}

impl GainState {
    /// Holds `q_target` with uniform stiffness `kp`.
    pub fn uniform(kp: f64, q_target: [f64; NUM_JOINTS]) -> Self {
        Self { kp: [kp; NUM_JOINTS], kd: [damping_for(kp); NUM_JOINTS], q_target }
    }

    pub fn mean_kp_per_leg(&self) -> [f64; NUM_LEGS] {
        std::array::from_fn(|leg| (0..JOINTS_PER_LEG).map(|g| self.kp[joint_index(leg, g)]).sum::<f64>() / JOINTS_PER_LEG as f64)
    }

    pub fn mean_kp_per_group(&self) -> [f64; JOINTS_PER_LEG] {
        std::array::from_fn(|g| (0..NUM_LEGS).map(|leg| self.kp[joint_index(leg, g)]).sum::<f64>() / NUM_LEGS as f64)
    }
}

#[inline]
pub fn damping_for(kp: f64) -> f64 {
    DAMPING_RATIO * kp.sqrt()
}

#[inline]
fn affine(raw: f64, lo: f64, hi: f64) -> f64 {
    lo + (raw + 1.0) * 0.5 * (hi - lo)
}

/// Decodes an action into joint targets and gains.
///
/// Targets are `q_default + position_scale·raw` clamped to `limits`.
pub fn decode_action(
    action: &ActionVector,
    q_default: &[f64; NUM_JOINTS],
    limits: &[[f64; 2]; NUM_JOINTS],
    position_scale: f64,
) -> GainState {
    let raw = action.raw();
    let q_target = std::array::from_fn(|i| (q_default[i] + position_scale * raw[i]).clamp(limits[i][0], limits[i][1]));
    let stiff = &raw[NUM_JOINTS..];
    let kp: [f64; NUM_JOINTS] = match action.grouping() {
        StiffnessGrouping::FixedP20 => [20.0; NUM_JOINTS],
        StiffnessGrouping::FixedP50 => [50.0; NUM_JOINTS],
        StiffnessGrouping::Ijs => std::array::from_fn(|i| affine(stiff[i], KP_MIN, KP_MAX)),
        StiffnessGrouping::Pjs => std::array::from_fn(|i| affine(stiff[i % JOINTS_PER_LEG], KP_MIN, KP_MAX)),
        StiffnessGrouping::Pls => std::array::from_fn(|i| affine(stiff[i / JOINTS_PER_LEG], KP_MIN, KP_MAX)),
        StiffnessGrouping::Hjls => {
            let (lo, hi) = (KP_MIN.sqrt(), KP_MAX.sqrt());
            let leg: [f64; NUM_LEGS] = std::array::from_fn(|l| affine(stiff[l], lo, hi));
            let group: [f64; JOINTS_PER_LEG] = std::array::from_fn(|g| affine(stiff[NUM_LEGS + g], lo, hi));
            std::array::from_fn(|i| (leg[i / JOINTS_PER_LEG] * group[i % JOINTS_PER_LEG]).clamp(KP_MIN, KP_MAX))
        }
    };
    let kd = kp.map(damping_for);
    GainState { kp, kd, q_target }
}

/// PD torque `kp·(q_target − q) − kd·q̇`, clamped to `±torque_limit`.
///
/// With zero desired joint velocity the fixed-gain law
/// `Kp(q_target − q) + Kd(q̇_des − q̇)` and the variable-gain law coincide, so
/// both paradigms share this evaluation.
pub fn compute_torque(
    gains: &GainState,
    q: &[f64],
    qdot: &[f64],
    _paradigm: ControlParadigm,
    torque_limit: &[f64],
) -> Result<[f64; NUM_JOINTS], ActuationError> {
    ActuatorModel::identity().torque(gains, q, qdot, torque_limit)
}

/// Per-joint multiplicative perturbations of the actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorModel {
    pub kp_scale: [f64; NUM_JOINTS],
    pub kd_scale: [f64; NUM_JOINTS],
    pub motor_strength: [f64; NUM_JOINTS],
}

impl ActuatorModel {
    pub fn identity() -> Self {
        Self { kp_scale: [1.0; NUM_JOINTS], kd_scale: [1.0; NUM_JOINTS], motor_strength: [1.0; NUM_JOINTS] }
    }

    /// Effective stiffness seen by the joint.
    pub fn effective_kp(&self, gains: &GainState) -> [f64; NUM_JOINTS] {
        std::array::from_fn(|i| gains.kp[i] * self.kp_scale[i])
    }

    /// `strength·(kp·s_p·(q_target − q) − kd·s_d·q̇)`, then clamped.
    pub fn torque(
        &self,
        gains: &GainState,
        q: &[f64],
        qdot: &[f64],
        torque_limit: &[f64],
    ) -> Result<[f64; NUM_JOINTS], ActuationError> {
        for (what, values) in [("q", q), ("qdot", qdot)] {
            if values.len() != NUM_JOINTS {
                return Err(ActuationError::Dimension { what, expected: NUM_JOINTS, actual: values.len() });
            }
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(ActuationError::NonFinite { what, index, value: values[index] });
            }
        }
        Ok(std::array::from_fn(|i| {
            let kp = gains.kp[i] * self.kp_scale[i];
            let kd = gains.kd[i] * self.kd_scale[i];
            let tau = self.motor_strength[i] * (kp * (gains.q_target[i] - q[i]) - kd * qdot[i]);
            tau.clamp(-torque_limit[i], torque_limit[i])
        }))
    }
}

/// Actuator with the given gain and strength scales applied.
pub fn apply_gain_randomization(
    kp_scale: [f64; NUM_JOINTS],
    kd_scale: [f64; NUM_JOINTS],
    motor_strength: [f64; NUM_JOINTS],
) -> ActuatorModel {
    ActuatorModel { kp_scale, kd_scale, motor_strength }
}
