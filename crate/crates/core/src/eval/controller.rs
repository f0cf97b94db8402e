//! What drives an evaluated robot: a trained policy or a scripted stand-in.

use crate::actuation::StiffnessGrouping;
use crate::env::{EnvConfig, Env};
use crate::error::EvalError;
use crate::physics::KinematicTree;
use crate::ppo::PolicyParameters;

/// Maps an actor observation to a raw action. Stateless, so trials can run
/// in parallel.
pub trait Controller: Sync {
    fn action(&self, observation: &[f64]) -> Vec<f64>;
    fn action_dim(&self) -> usize;
}

impl Controller for PolicyParameters {
    fn action(&self, observation: &[f64]) -> Vec<f64> {
        self.act(observation)
    }

    fn action_dim(&self) -> usize {
        PolicyParameters::action_dim(self)
    }
}

/// Always outputs the same raw action.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantController(pub Vec<f64>);

impl ConstantController {
    /// Default pose at mid-range stiffness.
    pub fn zero(grouping: StiffnessGrouping) -> Self {
        Self(vec![0.0; grouping.action_dim()])
    }

    /// Softest joints, front thighs swung forward and rear thighs back with
    /// bent knees: the trunk drops onto the floor within about 0.3 s.
    pub fn collapse(grouping: StiffnessGrouping) -> Self {
        use crate::physics::{joint_index, NUM_JOINTS, NUM_LEGS};
        let mut a = vec![-1.0; grouping.action_dim()];
        a[..NUM_JOINTS].fill(0.0);
        for leg in 0..NUM_LEGS {
            // Legs 0 and 1 are the front pair.
            a[joint_index(leg, 1)] = if leg < 2 { 1.0 } else { -1.0 };
            a[joint_index(leg, 2)] = -1.0;
        }
        Self(a)
    }
}

impl Controller for ConstantController {
    fn action(&self, _: &[f64]) -> Vec<f64> {
        self.0.clone()
    }

    fn action_dim(&self) -> usize {
        self.0.len()
    }
}

/// Robot, action space and task settings shared by the protocols.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub tree: KinematicTree,
    pub grouping: StiffnessGrouping,
    pub env_config: EnvConfig,
}

impl Scenario {
    pub fn new(grouping: StiffnessGrouping) -> Self {
        Self { tree: KinematicTree::default_quadruped(), grouping, env_config: EnvConfig::default() }
    }

    pub fn check(&self, controller: &dyn Controller) -> Result<(), EvalError> {
        if controller.action_dim() != self.grouping.action_dim() {
            return Err(EvalError::Invalid(format!(
                "controller emits {} actions, {} needs {}",
                controller.action_dim(),
                self.grouping.name(),
                self.grouping.action_dim()
            )));
        }
        Ok(())
    }

    /// A fresh environment; `randomized = false` disables randomization and
    /// observation noise.
    pub fn env(&self, seed: u64, randomized: bool) -> Result<Env, EvalError> {
        let config = if randomized { self.env_config.clone() } else { self.env_config.clone().deterministic() };
        Ok(Env::new(self.tree.clone(), self.grouping, config, seed)?)
    }
}

/// Planar base velocity in the heading frame, m/s.
pub fn local_planar_velocity(env: &Env) -> [f64; 2] {
    let v = env.state().local_linear_velocity();
    [v.x, v.y]
}
