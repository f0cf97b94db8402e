//! Reinforcement-learned quadruped locomotion with variable joint stiffness.
//!
//! The crate bundles a floating-base rigid-body simulator ([`physics`]), the
//! impedance actuation layer with its stiffness groupings ([`actuation`]), the
//! locomotion task ([`env`]), a PPO trainer ([`ppo`]), and the evaluation
//! protocols ([`eval`]).

pub mod error;
pub mod physics;
pub mod actuation;
pub mod env;
pub mod ppo;
pub mod eval;
