//! Per-episode domain randomization and per-step observation noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::physics::{KinematicTree, NUM_JOINTS, NUM_LEGS};

/// Uniform support `[lo, hi]`.
pub type Range = [f64; 2];

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: Range) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn check_range(name: &str, [lo, hi]: Range) -> Result<(), ConfigError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} range [{lo}, {hi}] is empty or non-finite")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainRandomizationConfig {
    pub enabled: bool,
    /// Added to the trunk, kg.
    pub payload: Range,
    /// Added to each hip link independently, kg.
    pub hip_mass: Range,
    /// Multiplies the ground friction coefficient.
    pub friction: Range,
    /// Added to the vertical gravity component, m/s².
    pub gravity_offset: Range,
    /// Action-application delay, ms (rounded down to physics steps).
    pub delay_ms: Range,
    /// Multiplies each joint's stiffness.
    pub kp_scale: Range,
    /// Multiplies each joint's damping.
    pub kd_scale: Range,
    /// Multiplies each joint's delivered torque.
    pub motor_strength: Range,
}

impl Default for DomainRandomizationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            payload: [-1.0, 3.0],
            hip_mass: [-0.5, 0.5],
            friction: [0.3, 1.25],
            gravity_offset: [-1.0, 1.0],
            delay_ms: [0.0, 15.0],
            kp_scale: [0.8, 1.3],
            kd_scale: [0.5, 1.5],
            motor_strength: [0.9, 1.1],
        }
    }
}

impl DomainRandomizationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, r) in [
            ("randomization.payload", self.payload),
            ("randomization.hip_mass", self.hip_mass),
            ("randomization.friction", self.friction),
            ("randomization.gravity_offset", self.gravity_offset),
            ("randomization.delay_ms", self.delay_ms),
            ("randomization.kp_scale", self.kp_scale),
            ("randomization.kd_scale", self.kd_scale),
            ("randomization.motor_strength", self.motor_strength),
        ] {
            check_range(name, r)?;
        }
        if self.delay_ms[0] < 0.0 || self.friction[0] <= 0.0 {
            return Err(ConfigError::Invalid("delay must be ≥ 0 and friction multiplier > 0".into()));
        }
        Ok(())
    }

    /// Draws one episode's perturbations. Disabled randomization yields the
    /// identity without consuming randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, physics_dt: f64) -> EpisodeRandomization {
        if !self.enabled {
            return EpisodeRandomization::identity();
        }
        let payload = uniform(rng, self.payload);
        let hip_mass = std::array::from_fn(|_| uniform(rng, self.hip_mass));
        let friction_scale = uniform(rng, self.friction);
        let gravity_offset = uniform(rng, self.gravity_offset);
        let delay_s = uniform(rng, self.delay_ms) * 1e-3;
        let kp_scale = std::array::from_fn(|_| uniform(rng, self.kp_scale));
        let kd_scale = std::array::from_fn(|_| uniform(rng, self.kd_scale));
        let motor_strength = std::array::from_fn(|_| uniform(rng, self.motor_strength));
        EpisodeRandomization {
            payload,
            hip_mass,
            friction_scale,
            gravity_offset,
            delay_s,
            delay_substeps: delay_substeps(delay_s, physics_dt),
            kp_scale,
            kd_scale,
            motor_strength,
        }
    }
}

/// Whole physics steps covered by `delay_s`, rounding down.
pub fn delay_substeps(delay_s: f64, physics_dt: f64) -> usize {
    // The small epsilon keeps exact multiples (e.g. 4 ms at 2 ms) from
    // rounding down through representation error.
    ((delay_s / physics_dt) + 1e-9).floor().max(0.0) as usize
}

/// One episode's sampled perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRandomization {
    pub payload: f64,
    pub hip_mass: [f64; NUM_LEGS],
    pub friction_scale: f64,
    pub gravity_offset: f64,
    pub delay_s: f64,
    pub delay_substeps: usize,
    pub kp_scale: [f64; NUM_JOINTS],
    pub kd_scale: [f64; NUM_JOINTS],
    pub motor_strength: [f64; NUM_JOINTS],
}

impl EpisodeRandomization {
    pub fn identity() -> Self {
        Self {
            payload: 0.0,
            hip_mass: [0.0; NUM_LEGS],
            friction_scale: 1.0,
            gravity_offset: 0.0,
            delay_s: 0.0,
            delay_substeps: 0,
            kp_scale: [1.0; NUM_JOINTS],
            kd_scale: [1.0; NUM_JOINTS],
            motor_strength: [1.0; NUM_JOINTS],
        }
    }

    /// Trunk payload followed by the four hip deltas.
    pub fn mass_deltas(&self) -> [f64; 5] {
        [self.payload, self.hip_mass[0], self.hip_mass[1], self.hip_mass[2], self.hip_mass[3]]
    }

    /// The nominal model with this episode's masses, friction, and gravity.
    pub fn apply(&self, nominal: &KinematicTree) -> Result<KinematicTree, crate::error::PhysicsError> {
        let mut tree = nominal.clone();
        tree.add_mass(TRUNK_BODY, self.payload)?;
        for (leg, delta) in self.hip_mass.iter().enumerate() {
            tree.add_mass(hip_body(leg), *delta)?;
        }
        tree.contact.friction *= self.friction_scale;
        tree.gravity.z += self.gravity_offset;
        Ok(tree)
    }
}

pub const TRUNK_BODY: usize = 0;

/// Body index of a leg's hip link (child of its first joint).
pub fn hip_body(leg: usize) -> usize {
    crate::physics::joint_index(leg, 0) + 1
}

/// Half-widths of the additive uniform observation noise, per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// rad
    pub joint_position: f64,
    /// rad/s
    pub joint_velocity: f64,
    /// m/s
    pub linear_velocity: f64,
    /// rad/s
    pub angular_velocity: f64,
    pub projected_gravity: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            joint_position: 0.01,
            joint_velocity: 1.5,
            linear_velocity: 0.1,
            angular_velocity: 0.2,
            projected_gravity: 0.05,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let widths = [
            self.joint_position,
            self.joint_velocity,
            self.linear_velocity,
            self.angular_velocity,
            self.projected_gravity,
        ];
        if widths.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(ConfigError::Invalid("noise half-widths must be finite and ≥ 0".into()))
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
        if half_width == 0.0 {
            0.0
        } else {
            rng.random_range(-half_width..=half_width)
        }
    }
}
