//! Per-control-step trajectory log in CSV.
//!
//! Columns: `time`, base position `base_{x,y,z}`, orientation
//! `quat_{w,x,y,z}`, world velocities `vel_{x,y,z}` and `omega_{x,y,z}`,
//! `q_0..q_11`, `qdot_0..qdot_11`, `action_0..`, per-joint `kp_0..kp_11`,
//! per-leg means `kp_FR, kp_FL, kp_RR, kp_RL`, commands `cmd_vx, cmd_vy,
//! cmd_yaw`, unweighted reward terms `r_<term>`, `reward_total`, contact
//! flags `contact_<leg>` (0/1), push force `push_{x,y,z}`, and `status`.
//! A run cut short by divergence ends with a row whose `status` is
//! `divergence` and whose numeric fields repeat the last valid state.

use std::io::Write;

use super::episode::StepInfo;
use super::reward::RewardTerm;
use crate::physics::{SimState, LEG_NAMES, NUM_JOINTS};

pub struct TrajectoryLogger<W: Write> {
    writer: csv::Writer<W>,
    action_dim: usize,
}

impl<W: Write> TrajectoryLogger<W> {
    pub fn new(inner: W, action_dim: usize) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(Self::header(action_dim))?;
        Ok(Self { writer, action_dim })
    }

    pub fn header(action_dim: usize) -> Vec<String> {
        let mut h: Vec<String> = ["time", "base_x", "base_y", "base_z", "quat_w", "quat_x", "quat_y", "quat_z"]
            .iter()
            .chain(&["vel_x", "vel_y", "vel_z", "omega_x", "omega_y", "omega_z"])
            .map(|s| s.to_string())
            .collect();
        h.extend((0..NUM_JOINTS).map(|i| format!("q_{i}")));
        h.extend((0..NUM_JOINTS).map(|i| format!("qdot_{i}")));
        h.extend((0..action_dim).map(|i| format!("action_{i}")));
        h.extend((0..NUM_JOINTS).map(|i| format!("kp_{i}")));
        h.extend(LEG_NAMES.iter().map(|l| format!("kp_{l}")));
        h.extend(["cmd_vx", "cmd_vy", "cmd_yaw"].map(String::from));
        h.extend(RewardTerm::ALL.iter().map(|t| format!("r_{}", t.name())));
        h.push("reward_total".into());
        h.extend(LEG_NAMES.iter().map(|l| format!("contact_{l}")));
        h.extend(["push_x", "push_y", "push_z", "status"].map(String::from));
        h
    }

    /// Logs the state reached by a step together with that step's data.
    pub fn log(&mut self, state: &SimState, action: &[f64], info: &StepInfo) -> csv::Result<()> {
        debug_assert_eq!(action.len(), self.action_dim);
        let q = state.base_orientation.quaternion();
        let mut row: Vec<String> = Vec::with_capacity(96);
        let mut num = |x: f64| row.push(x.to_string());
        num(state.time);
        state.base_position.iter().for_each(|x| num(*x));
        [q.w, q.i, q.j, q.k].iter().for_each(|x| num(*x));
        state.base_linear_velocity.iter().for_each(|x| num(*x));
        state.base_angular_velocity.iter().for_each(|x| num(*x));
        state.q.iter().chain(&state.qdot).chain(action).chain(&info.gains.kp).for_each(|x| num(*x));
        info.gains.mean_kp_per_leg().iter().for_each(|x| num(*x));
        info.command.to_array().iter().for_each(|x| num(*x));
        info.reward.raw.iter().for_each(|x| num(*x));
        num(info.reward.total);
        state.contact_flags.iter().for_each(|c| num(if *c { 1.0 } else { 0.0 }));
        info.push_force.iter().for_each(|x| num(*x));
        row.push(info.status.name().to_string());
        self.writer.write_record(&row)
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }

    pub fn into_inner(self) -> Result<W, csv::IntoInnerError<csv::Writer<W>>> {
        self.writer.into_inner()
    }
}
