//! The locomotion task: observations, rewards, randomization, commands,
//! pushes, and termination around the simulator.

pub mod command;
pub mod config;
pub mod episode;
pub mod observation;
pub mod randomization;
pub mod reward;
pub mod termination;
pub mod trajectory;
pub mod vec_env;

pub use command::{active_push_force, command_times, sample_command, schedule_pushes, CommandVector, PushEvent};
pub use config::{CommandConfig, EnvConfig, PushConfig};
pub use episode::{Env, EpisodeContext, StepInfo};
pub use observation::{observation_dim, observe, observe_privileged, privileged_dim};
pub use randomization::{DomainRandomizationConfig, EpisodeRandomization, NoiseConfig};
pub use reward::{reward_terms, FeetAirTime, RewardBreakdown, RewardTerm, RewardWeights, StepSignals};
pub use termination::{check_termination, EpisodeStatus, TerminationReason};
pub use trajectory::TrajectoryLogger;
pub use vec_env::{episode_seed, EnvTransition, EpisodeSummary, VecEnv};
