//! Run file: one TOML document naming the robot, the action space, and every
//! setting of a training run and its evaluations.
//!
//! ```toml
//! grouping = "PLS"
//! seed = 7
//! output_dir = "runs/pls"
//! model = "robot.toml"        # optional, default quadruped otherwise
//!
//! [train]                     # any TrainConfig field
//! n_envs = 64
//!
//! [env]                       # any EnvConfig field
//! episode_length_s = 20.0
//!
//! [eval.push]                 # protocol settings for `eval`
//! n_trials = 600
//! ```
//!
//! Relative paths are resolved against the run file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stiffquad::actuation::StiffnessGrouping;
use stiffquad::env::EnvConfig;
use stiffquad::eval::{CotProtocol, PayloadProtocol, PushProtocol, TrackingConfig};
use stiffquad::ppo::TrainConfig;

pub const ECHO_FILE: &str = "run.toml";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<StiffnessGrouping>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub train: TrainConfig,
    pub env: EnvConfig,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub tracking: TrackingConfig,
    pub push: PushProtocol,
    pub cot: CotProtocol,
    pub payload: PayloadProtocol,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let mut config: RunConfig =
            toml::from_str(text).with_context(|| format!("parsing {}", origin.display()))?;
        let base = origin.parent().unwrap_or(Path::new(""));
        for path in [&mut config.output_dir, &mut config.model].into_iter().flatten() {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.env.validate()?;
        if let Some(model) = &self.model {
            if !model.is_file() {
                bail!("model file {} does not exist", model.display());
            }
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = RunConfig::from_toml_str("", Path::new("run.toml")).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let text = "grouping = \"HJLS\"\nseed = 3\n[train]\nn_envs = 8\n[eval.push]\nn_trials = 10\n";
        let c = RunConfig::from_toml_str(text, Path::new("run.toml")).unwrap();
        assert_eq!(c.grouping, Some(StiffnessGrouping::Hjls));
        assert_eq!(c.train.n_envs, 8);
        assert_eq!(c.eval.push.n_trials, 10);
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap(), Path::new("run.toml")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "seed = 1\n\n[train]\nn_envs = \"many\"\n";
        let err = format!("{:#}", RunConfig::from_toml_str(text, Path::new("bad.toml")).unwrap_err());
        assert!(err.contains("bad.toml") && err.contains("line 4"), "{err}");
        let err = format!("{:#}", RunConfig::from_toml_str("[train]\nlearning_rat = 1.0\n", Path::new("x.toml")).unwrap_err());
        assert!(err.contains("line 2") && err.contains("learning_rat"), "{err}");
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let c = RunConfig::from_toml_str("output_dir = \"out\"\n", Path::new("cfg/run.toml")).unwrap();
        assert_eq!(c.output_dir, Some(PathBuf::from("cfg/out")));
    }
}
