//! PPO training of the asymmetric actor-critic.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod config;
pub mod mlp;
pub mod normalizer;
pub mod policy;
pub mod train;
pub mod update;

pub use adam::{clip_grad_norm, Adam};
pub use buffer::{compute_gae, normalize_advantages, RolloutBuffer, Sample};
pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use mlp::Mlp;
pub use normalizer::RunningNormalizer;
pub use policy::{columns, PolicyParameters};
pub use train::{train, IterationMetrics, TrainOutcome, FINAL_CHECKPOINT, METRICS_FILE};
pub use update::{ppo_update, probability_ratios, TrainingBatch, UpdateStats};
