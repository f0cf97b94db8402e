//! One simulated robot running the locomotion task.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::command::{active_push_force, sample_command, schedule_pushes, CommandVector, PushEvent};
use super::config::EnvConfig;
use super::observation::{observation_dim, observe, observe_privileged, privileged_dim};
use super::randomization::EpisodeRandomization;
use super::reward::{reward_terms, FeetAirTime, RewardBreakdown, RewardTerm, StepSignals, NUM_TERMS};
use super::termination::{check_termination, EpisodeStatus, TerminationReason};
use crate::actuation::{decode_action, ActionVector, ActuatorModel, GainState, StiffnessGrouping};
use crate::error::{ActuationError, PhysicsError};
use crate::physics::{kinematics, step, ExternalForce, KinematicTree, SimState, NUM_JOINTS, NUM_LEGS};

/// Everything sampled or accumulated over one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeContext {
    pub seed: u64,
    pub randomization: EpisodeRandomization,
    pub command: CommandVector,
    pub pushes: Vec<PushEvent>,
    /// Clamped raw action of the previous control step (zeros at start).
    pub prev_action: Vec<f64>,
    /// Gains currently driving the joints.
    pub gains: GainState,
    pub step_count: usize,
    pub air_time: FeetAirTime,
    pub episode_return: f64,
}

/// Result of one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub reward: RewardBreakdown,
    pub status: EpisodeStatus,
    /// Gains decoded from this step's action.
    pub gains: GainState,
    /// Mean over physics steps of Σ max(0, τ·q̇), W.
    pub positive_power: f64,
    /// Torques of the final physics step, N·m.
    pub torques: [f64; NUM_JOINTS],
    /// Push force acting at the end of the step, N.
    pub push_force: Vector3<f64>,
    /// Command the step was rewarded against.
    pub command: CommandVector,
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    grouping: StiffnessGrouping,
    nominal: KinematicTree,
    tree: KinematicTree,
    actuator: ActuatorModel,
    q_default: [f64; NUM_JOINTS],
    limits: [[f64; 2]; NUM_JOINTS],
    torque_limits: Vec<f64>,
    state: SimState,
    rng: ChaCha8Rng,
    ctx: EpisodeContext,
    command_override: Option<CommandVector>,
    push_override: Option<Vec<PushEvent>>,
}

impl Env {
    /// A new environment, reset with `seed`.
    pub fn new(nominal: KinematicTree, grouping: StiffnessGrouping, config: EnvConfig, seed: u64) -> Result<Self, PhysicsError> {
        if !nominal.is_quadruped() {
            return Err(PhysicsError::InvalidModel("the locomotion task needs the 12-joint quadruped".into()));
        }
        let q_default: [f64; NUM_JOINTS] = nominal.q_default.clone().try_into().expect("quadruped has 12 joints");
        let limits: [[f64; 2]; NUM_JOINTS] = nominal.position_limits().try_into().expect("quadruped has 12 joints");
        let torque_limits = nominal.torque_limits();
        let gains = decode_action(&ActionVector::zeros(grouping), &q_default, &limits, config.action_position_scale);
        let state = SimState::at_rest(&nominal, Vector3::zeros(), nominal.q_default.clone());
        let ctx = EpisodeContext {
            seed,
            randomization: EpisodeRandomization::identity(),
            command: CommandVector::default(),
            pushes: Vec::new(),
            prev_action: vec![0.0; grouping.action_dim()],
            gains,
            step_count: 0,
            air_time: FeetAirTime::default(),
            episode_return: 0.0,
        };
        let mut env = Self {
            config,
            grouping,
            tree: nominal.clone(),
            nominal,
            actuator: ActuatorModel::identity(),
            q_default,
            limits,
            torque_limits,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ctx,
            command_override: None,
            push_override: None,
        };
        env.reset(seed)?;
        Ok(env)
    }

    /// Starts a new episode: default pose with small joint perturbations,
    /// standing on the floor, fresh randomization, command, and pushes.
    pub fn reset(&mut self, seed: u64) -> Result<(), PhysicsError> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let randomization = self.config.randomization.sample(&mut self.rng, self.config.physics_dt());
        self.tree = randomization.apply(&self.nominal)?;
        self.actuator = ActuatorModel {
            kp_scale: randomization.kp_scale,
            kd_scale: randomization.kd_scale,
            motor_strength: randomization.motor_strength,
        };

        let noise = self.config.reset_joint_noise;
        let q: Vec<f64> = (0..NUM_JOINTS)
            .map(|i| {
                let dq = if noise > 0.0 { self.rng.random_range(-noise..=noise) } else { 0.0 };
                let [lo, hi] = self.limits[i];
                (self.q_default[i] + dq).clamp(lo + 1e-3, hi - 1e-3)
            })
            .collect();
        let mut state = SimState::at_rest(&self.tree, Vector3::zeros(), q);
        // Lowest foot just touching the floor.
        let lowest = kinematics(&self.tree, &state).foot_positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        state.base_position.z = -lowest;
        crate::physics::refresh_contacts(&self.tree, &mut state);
        self.state = state;

        let command = match self.command_override {
            Some(c) => c,
            None => sample_command(&mut self.rng, &self.config.commands, 0.0),
        };
        let pushes = match &self.push_override {
            Some(p) => p.clone(),
            None => schedule_pushes(&mut self.rng, &self.config.pushes, self.config.episode_length_s),
        };
        self.ctx = EpisodeContext {
            seed,
            randomization,
            command,
            pushes,
            prev_action: vec![0.0; self.grouping.action_dim()],
            gains: decode_action(
                &ActionVector::zeros(self.grouping),
                &self.q_default,
                &self.limits,
                self.config.action_position_scale,
            ),
            step_count: 0,
            air_time: FeetAirTime::new([true; NUM_LEGS]),
            episode_return: 0.0,
        };
        Ok(())
    }

    /// Advances one control step with the raw policy action.
    pub fn step(&mut self, raw_action: &[f64]) -> Result<StepInfo, ActuationError> {
        let action = ActionVector::new(self.grouping, raw_action)?;
        let new_gains = decode_action(&action, &self.q_default, &self.limits, self.config.action_position_scale);
        let old_gains = self.ctx.gains;
        let delay = self.ctx.randomization.delay_substeps.min(self.config.substeps);
        let dt = self.config.physics_dt();
        let prev_state = self.state.clone();

        let mut positive_power = 0.0;
        let mut abs_power = [0.0; NUM_JOINTS];
        let mut torques = [0.0; NUM_JOINTS];
        let mut diverged = false;
        for s in 0..self.config.substeps {
            let gains = if s < delay { &old_gains } else { &new_gains };
            let tau = self.actuator.torque(gains, &self.state.q, &self.state.qdot, &self.torque_limits)?;
            for i in 0..NUM_JOINTS {
                let p = tau[i] * self.state.qdot[i];
                positive_power += p.max(0.0);
                abs_power[i] += p.abs();
            }
            torques = tau;
            let push = active_push_force(&self.ctx.pushes, self.state.time);
            let ext = if push == Vector3::zeros() {
                Vec::new()
            } else {
                vec![ExternalForce { body: 0, force: push, application_point: self.state.base_position }]
            };
            match step(&self.tree, &self.state, &tau, &ext, dt) {
                Ok(next) => self.state = next,
                Err(_) => {
                    diverged = true;
                    break;
                }
            }
        }
        let n = self.config.substeps as f64;
        positive_power /= n;
        let joint_power = abs_power.map(|p| p / n);
        self.ctx.gains = new_gains;
        self.ctx.step_count += 1;

        let command = self.ctx.command;
        let reward_config = &self.config;
        let (status, reward) = if diverged {
            // The state is unusable; only the failure is scored.
            let mut raw = [0.0; NUM_TERMS];
            raw[RewardTerm::Termination.index()] = 1.0;
            (
                EpisodeStatus::Terminated(TerminationReason::Divergence),
                RewardBreakdown::combine(raw, &reward_config.rewards, reward_config.control_dt),
            )
        } else {
            let contacts: [bool; NUM_LEGS] = self.state.contact_flags.clone().try_into().expect("four feet");
            let touchdowns = self.ctx.air_time.update(contacts, self.config.control_dt);
            let status = check_termination(&self.tree, &self.state, self.ctx.step_count, self.config.max_episode_steps());
            let signals = StepSignals { command, joint_power, touchdowns, terminated: status.is_terminated() };
            let reward = reward_terms(
                &self.tree,
                &prev_state,
                &self.state,
                action.raw(),
                &self.ctx.prev_action,
                &new_gains,
                &signals,
                reward_config,
            );
            (status, reward)
        };
        self.ctx.episode_return += reward.total;
        self.ctx.prev_action = action.raw().to_vec();

        let window = (self.config.commands.interval_s / self.config.control_dt).round().max(1.0) as usize;
        if self.command_override.is_none() && self.ctx.step_count % window == 0 && !status.is_done() {
            let t = self.state.time;
            self.ctx.command = sample_command(&mut self.rng, &self.config.commands, t);
        }

        Ok(StepInfo {
            reward,
            status,
            gains: new_gains,
            positive_power,
            torques,
            push_force: active_push_force(&self.ctx.pushes, self.state.time),
            command,
        })
    }

    /// Actor observation (noisy when noise is enabled).
    pub fn observe(&mut self) -> Vec<f64> {
        let noise = &self.config.noise;
        observe(&self.tree, &self.state, &self.ctx.command, &self.ctx.prev_action, Some((noise, &mut self.rng)))
    }

    pub fn observe_clean(&self) -> Vec<f64> {
        observe::<ChaCha8Rng>(&self.tree, &self.state, &self.ctx.command, &self.ctx.prev_action, None)
    }

    pub fn observe_privileged(&self) -> Vec<f64> {
        let push = active_push_force(&self.ctx.pushes, self.state.time);
        observe_privileged(&self.ctx.randomization, self.tree.contact.friction, &push, &self.observe_clean())
    }

    /// Pins the command (re-applied on reset) or restores sampling.
    pub fn set_command_override(&mut self, command: Option<CommandVector>) {
        self.command_override = command;
        if let Some(c) = command {
            self.ctx.command = c;
        }
    }

    /// Replaces the push schedule (re-applied on reset) or restores sampling.
    pub fn set_push_override(&mut self, pushes: Option<Vec<PushEvent>>) {
        if let Some(p) = &pushes {
            self.ctx.pushes = p.clone();
        }
        self.push_override = pushes;
    }

    /// Adds (or with a negative value removes) trunk mass mid-episode.
    pub fn add_trunk_mass(&mut self, delta: f64) -> Result<(), PhysicsError> {
        self.tree.add_mass(super::randomization::TRUNK_BODY, delta)
    }

    pub fn observation_dim(&self) -> usize {
        observation_dim(self.grouping.action_dim())
    }

    pub fn privileged_dim(&self) -> usize {
        privileged_dim(self.grouping.action_dim())
    }

    pub fn action_dim(&self) -> usize {
        self.grouping.action_dim()
    }

    pub fn grouping(&self) -> StiffnessGrouping {
        self.grouping
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn tree(&self) -> &KinematicTree {
        &self.tree
    }

    pub fn nominal_tree(&self) -> &KinematicTree {
        &self.nominal
    }

    pub fn context(&self) -> &EpisodeContext {
        &self.ctx
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }
}
