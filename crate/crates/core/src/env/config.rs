//! Task configuration. Every field has a default, so a config file only needs
//! the entries it changes; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::randomization::{DomainRandomizationConfig, NoiseConfig};
use super::reward::RewardWeights;
use crate::error::ConfigError;

pub const DEFAULT_ENV_TOML: &str = include_str!("../../configs/env.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Policy period, s.
    pub control_dt: f64,
    /// Physics steps per control step.
    pub substeps: usize,
    pub episode_length_s: f64,
    pub commands: CommandConfig,
    pub pushes: PushConfig,
    pub randomization: DomainRandomizationConfig,
    pub noise: NoiseConfig,
    pub rewards: RewardWeights,
    /// Target base height, m.
    pub base_height_target: f64,
    /// Target swing-foot height, m.
    pub foot_clearance_target: f64,
    /// Feet below this height count as slipping when they move, m.
    pub foot_slip_height: f64,
    /// Half-width of the uniform joint perturbation at reset, rad.
    pub reset_joint_noise: f64,
    /// Scale from position entries of the action to joint offsets, rad.
    pub action_position_scale: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.02,
            substeps: 10,
            episode_length_s: 20.0,
            commands: CommandConfig::default(),
            pushes: PushConfig::default(),
            randomization: DomainRandomizationConfig::default(),
            noise: NoiseConfig::default(),
            rewards: RewardWeights::default(),
            base_height_target: 0.30,
            foot_clearance_target: 0.08,
            foot_slip_height: 0.01,
            reset_joint_noise: 0.05,
            action_position_scale: crate::actuation::DEFAULT_POSITION_SCALE,
        }
    }
}

impl EnvConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::from_toml(origin, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn physics_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }

    /// Control steps per episode.
    pub fn max_episode_steps(&self) -> usize {
        (self.episode_length_s / self.control_dt).round() as usize
    }

    /// Training noise and randomization switched off.
    pub fn deterministic(mut self) -> Self {
        self.randomization.enabled = false;
        self.noise.enabled = false;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.control_dt > 0.0) || self.substeps == 0 {
            return bad(format!("control_dt = {} and substeps = {} must be positive", self.control_dt, self.substeps));
        }
        if self.physics_dt() > crate::physics::integrate::MAX_TIMESTEP {
            return bad(format!("physics step {} s is too large", self.physics_dt()));
        }
        if !(self.episode_length_s >= self.control_dt) {
            return bad(format!("episode_length_s = {} is shorter than one control step", self.episode_length_s));
        }
        if !(self.commands.interval_s > 0.0) {
            return bad("commands.interval_s must be positive".into());
        }
        for (name, [lo, hi]) in [
            ("commands.lin_vel_x", self.commands.lin_vel_x),
            ("commands.lin_vel_y", self.commands.lin_vel_y),
            ("commands.ang_vel_yaw", self.commands.ang_vel_yaw),
            ("pushes.force", self.pushes.force),
            ("pushes.impulse", self.pushes.impulse),
        ] {
            if !(lo <= hi) {
                return bad(format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if self.pushes.enabled && !(self.pushes.force[0] > 0.0 && self.pushes.interval_s > 0.0) {
            return bad("pushes need a positive force and interval".into());
        }
        self.randomization.validate()?;
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandConfig {
    /// Resampling period, s.
    pub interval_s: f64,
    pub lin_vel_x: [f64; 2],
    pub lin_vel_y: [f64; 2],
    pub ang_vel_yaw: [f64; 2],
}

impl Default for CommandConfig {
    fn default() -> Self {
        Self { interval_s: 5.0, lin_vel_x: [-1.0, 1.0], lin_vel_y: [-1.0, 1.0], ang_vel_yaw: [-1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushConfig {
    pub enabled: bool,
    /// Nominal spacing of pushes, s.
    pub interval_s: f64,
    /// Each push start is shifted by U(−jitter, jitter), s.
    pub jitter_s: f64,
    /// Force magnitude range, N.
    pub force: [f64; 2],
    /// Impulse range, N·s; duration is impulse / force.
    pub impulse: [f64; 2],
}

impl Default for PushConfig {
    fn default() -> Self {
        Self { enabled: true, interval_s: 6.0, jitter_s: 0.5, force: [50.0, 150.0], impulse: [8.0, 15.0] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_is_the_default() {
        let parsed = EnvConfig::from_toml_str(DEFAULT_ENV_TOML, "env.toml").unwrap();
        assert_eq!(parsed, EnvConfig::default());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c = EnvConfig::from_toml_str("substeps = 20\n[rewards]\nlin_vel_tracking = 2.0\n", "x").unwrap();
        assert_eq!(c.substeps, 20);
        assert_eq!(c.rewards.lin_vel_tracking, 2.0);
        assert_eq!(c.rewards.ang_vel_tracking, 0.8);
        assert!((c.physics_dt() - 0.001).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_and_bad_range_are_rejected() {
        let err = EnvConfig::from_toml_str("[pushes]\nforse = [1.0, 2.0]\n", "bad.toml").unwrap_err();
        assert!(err.to_string().contains("forse"), "{err}");
        assert!(EnvConfig::from_toml_str("[commands]\nlin_vel_x = [1.0, -1.0]\n", "x").is_err());
    }

    #[test]
    fn episode_has_a_thousand_steps() {
        assert_eq!(EnvConfig::default().max_episode_steps(), 1000);
    }
}
