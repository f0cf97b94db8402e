use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-finite value in {what}[{index}]: {value}")]
    NonFinite { what: &'static str, index: usize, value: f64 },
    #[error("{what} has length {actual}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, actual: usize },
    #[error("physics timestep {0} s is outside (0, 0.01]")]
    InvalidTimestep(f64),
    #[error("simulation diverged at t = {time:.4} s (|velocity| = {max_velocity:e})")]
    Diverged { time: f64, max_velocity: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActuationError {
    #[error("action for {grouping} has length {actual}, expected {expected}")]
    ActionLength { grouping: &'static str, expected: usize, actual: usize },
    #[error("non-finite value in {what}[{index}]: {value}")]
    NonFinite { what: &'static str, index: usize, value: f64 },
    #[error("{what} has length {actual}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, actual: usize },
    #[error("unknown stiffness grouping `{0}` (valid: P20, P50, IJS, PJS, PLS, HJLS)")]
    UnknownGrouping(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub(crate) fn from_toml(path: impl Into<PathBuf>, err: toml::de::Error) -> Self {
        ConfigError::Parse { path: path.into(), message: err.to_string() }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} is not a policy checkpoint: {reason}")]
    Format { path: PathBuf, reason: String },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite {what} in epoch {epoch}, minibatch {minibatch}")]
    NonFiniteLoss { what: &'static str, epoch: usize, minibatch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("writing metrics to {path}: {source}")]
    Metrics { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("recovery boundary needs both outcomes, got only {0}")]
    SingleClass(&'static str),
    #[error("cost of transport undefined: mean speed {0:.4} m/s is below 0.05 m/s")]
    SpeedTooLow(f64),
    #[error("trajectory too short: {0:.3} s (need at least 1 s)")]
    TrajectoryTooShort(f64),
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("csv {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
}
