//! Velocity commands and push disturbances.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{CommandConfig, PushConfig};

/// Desired planar base velocity (base frame) and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandVector {
    pub v_xy: [f64; 2],
    pub omega_yaw: f64,
}

impl CommandVector {
    pub fn new(vx: f64, vy: f64, omega_yaw: f64) -> Self {
        Self { v_xy: [vx, vy], omega_yaw }
    }

    /// Planar-speed heading command, as used by the evaluation protocols.
    pub fn heading(speed: f64, heading_rad: f64) -> Self {
        Self::new(speed * heading_rad.cos(), speed * heading_rad.sin(), 0.0)
    }

    pub fn planar_speed(&self) -> f64 {
        self.v_xy[0].hypot(self.v_xy[1])
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.v_xy[0], self.v_xy[1], self.omega_yaw]
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// A fresh command from the configured ranges. Resampling happens at the
/// start of every `interval_s` window (t = 0, 5, 10, 15 s by default); `t`
/// is accepted for symmetry with that schedule but does not shape the draw.
pub fn sample_command<R: Rng + ?Sized>(rng: &mut R, config: &CommandConfig, _t: f64) -> CommandVector {
    let vx = uniform(rng, config.lin_vel_x);
    let vy = uniform(rng, config.lin_vel_y);
    let w = uniform(rng, config.ang_vel_yaw);
    CommandVector::new(vx, vy, w)
}

/// Start times of the command windows within an episode.
pub fn command_times(config: &CommandConfig, episode_length_s: f64) -> Vec<f64> {
    let n = (episode_length_s / config.interval_s - 1e-9).ceil().max(1.0) as usize;
    (0..n).map(|k| k as f64 * config.interval_s).collect()
}

/// A horizontal force on the trunk held over `[start_time, start_time + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub start_time: f64,
    pub duration: f64,
    pub force: [f64; 3],
}

impl PushEvent {
    pub fn from_polar(start_time: f64, duration: f64, magnitude: f64, azimuth: f64) -> Self {
        Self { start_time, duration, force: [magnitude * azimuth.cos(), magnitude * azimuth.sin(), 0.0] }
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start_time && t < self.start_time + self.duration
    }

    pub fn magnitude(&self) -> f64 {
        Vector3::from(self.force).norm()
    }

    pub fn impulse(&self) -> f64 {
        self.magnitude() * self.duration
    }
}

/// Sum of the pushes active at `t`.
pub fn active_push_force(pushes: &[PushEvent], t: f64) -> Vector3<f64> {
    pushes.iter().filter(|p| p.is_active(t)).map(|p| Vector3::from(p.force)).sum()
}

/// Training pushes every `interval_s` (first at one interval), each shifted
/// by jitter. Magnitude and impulse are drawn independently; duration is
/// their ratio. Pushes that would start after the episode are dropped.
pub fn schedule_pushes<R: Rng + ?Sized>(rng: &mut R, config: &PushConfig, episode_length_s: f64) -> Vec<PushEvent> {
    if !config.enabled {
        return Vec::new();
    }
    let mut pushes = Vec::new();
    let mut k = 1;
    loop {
        let nominal = k as f64 * config.interval_s;
        if nominal - config.jitter_s >= episode_length_s {
            break;
        }
        let start = (nominal + uniform(rng, [-config.jitter_s, config.jitter_s])).max(0.0);
        let magnitude = uniform(rng, config.force);
        let impulse = uniform(rng, config.impulse);
        let azimuth = rng.random_range(0.0..TAU);
        if start < episode_length_s {
            pushes.push(PushEvent::from_polar(start, impulse / magnitude, magnitude, azimuth));
        }
        k += 1;
    }
    pushes
}
