use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TrainError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_envs: usize,
    /// Rollout + update cycles.
    pub n_iterations: usize,
    pub steps_per_rollout: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub clip_ratio: f64,
    pub learning_rate: f64,
    /// Optimizer passes over each batch.
    pub epochs: usize,
    pub minibatches: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub seed: u64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Initial standard deviation of the Gaussian policy.
    pub init_std: f64,
    /// Normalized inputs are clipped to ±`obs_clip`.
    pub obs_clip: f64,
    /// Checkpoint interval in iterations (0 = final checkpoint only).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_envs: 4096,
            n_iterations: 2000,
            steps_per_rollout: 24,
            gamma: 0.99,
            lambda: 0.95,
            clip_ratio: 0.2,
            learning_rate: 3e-4,
            epochs: 5,
            minibatches: 4,
            entropy_coef: 0.005,
            value_coef: 1.0,
            max_grad_norm: 1.0,
            seed: 0,
            actor_hidden: vec![512, 256, 128],
            critic_hidden: vec![512, 256, 128],
            init_std: 0.5,
            obs_clip: 5.0,
            checkpoint_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::from_toml(origin, e))?;
        config.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("train config serializes")
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return bad("clip_ratio must lie in (0, 1)");
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("max_grad_norm", self.max_grad_norm),
            ("init_std", self.init_std),
            ("obs_clip", self.obs_clip),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(TrainError::InvalidConfig(format!("{name} must be positive")));
        }
        let counts = [
            ("n_envs", self.n_envs),
            ("n_iterations", self.n_iterations),
            ("steps_per_rollout", self.steps_per_rollout),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(TrainError::InvalidConfig(format!("{name} must be positive")));
        }
        if self.minibatches > self.n_envs * self.steps_per_rollout {
            return bad("more minibatches than samples per batch");
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let config = TrainConfig::default();
        config.validate().unwrap();
        assert_eq!(TrainConfig::from_toml_str(&config.to_toml_string(), "x").unwrap(), config);
    }

    #[test]
    fn rejects_out_of_range_values() {
        for text in ["gamma = 0.0", "lambda = 1.5", "clip_ratio = 1.0", "learning_rate = -1e-3", "epochs = 0", "n_envs = 0"] {
            assert!(TrainConfig::from_toml_str(text, "x").is_err(), "{text}");
        }
        assert!(TrainConfig::from_toml_str("gama = 0.9", "x").is_err());
    }
}
