//! Evaluation protocols: velocity tracking, push recovery with its SVM
//! boundary, cost of transport, and payload response, plus trajectory replay and
//! report export.

pub mod boundary;
pub mod controller;
pub mod cot;
pub mod payload;
pub mod push;
pub mod replay;
pub mod report;
pub mod svm;
pub mod tracking;

pub use boundary::{fit_recovery_boundary, push_features, RecoveryBoundary, CONFIDENCE};
pub use controller::{local_planar_velocity, ConstantController, Controller, Scenario};
pub use cot::{compute_cot, eval_cot, CotProtocol, CotRow, CotSample};
pub use payload::{eval_payload, PayloadProtocol, PayloadSample, PayloadSeries};
pub use push::{draw_trial, eval_push_recovery, run_trial, success_bins, PushProtocol, PushTrial, SuccessBin, SUCCESS_BIN_EDGES};
pub use replay::{replay, ReplaySummary};
pub use svm::{median_pairwise_distance, PlattScaling, Svm, SvmParams};
pub use tracking::{eval_tracking, mean_tracking_error, track_segment, SpeedSummary, TrackingCell, TrackingConfig, TrackingReport};
