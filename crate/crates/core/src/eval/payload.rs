//! Walking with a payload added to and later removed from the trunk.

use serde::{Deserialize, Serialize};

use super::controller::{local_planar_velocity, Controller, Scenario};
use crate::env::CommandVector;
use crate::error::EvalError;
use crate::physics::{joint_index, JOINTS_PER_LEG, NUM_LEGS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayloadProtocol {
    pub payload_kg: f64,
    /// Payload on at `load_s`, off at `unload_s`.
    pub load_s: f64,
    pub unload_s: f64,
    pub duration_s: f64,
    pub walk_speed: f64,
    pub seed: u64,
}

impl Default for PayloadProtocol {
    fn default() -> Self {
        Self { payload_kg: 5.0, load_s: 4.0, unload_s: 10.0, duration_s: 14.0, walk_speed: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadSample {
    pub time_s: f64,
    pub loaded: bool,
    /// Mean stiffness of each leg's joints (FR, FL, RR, RL).
    pub kp_leg: [f64; NUM_LEGS],
    pub base_height: f64,
    pub tracking_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadSeries {
    pub samples: Vec<PayloadSample>,
    /// Time of a fall, if the walk ended early.
    pub fell_at: Option<f64>,
}

impl PayloadSeries {
    /// Mean over legs and samples of kp; `loaded` selects the payload window,
    /// otherwise the samples before loading.
    pub fn mean_kp(&self, loaded: bool, load_s: f64) -> Option<f64> {
        let picked: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| if loaded { s.loaded } else { !s.loaded && s.time_s <= load_s })
            .map(|s| s.kp_leg.iter().sum::<f64>() / NUM_LEGS as f64)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

/// Straight walk with randomization off; logs at control rate.
pub fn eval_payload(scenario: &Scenario, controller: &dyn Controller, protocol: &PayloadProtocol) -> Result<PayloadSeries, EvalError> {
    scenario.check(controller)?;
    if !(0.0 <= protocol.load_s && protocol.load_s <= protocol.unload_s && protocol.unload_s <= protocol.duration_s) {
        return Err(EvalError::Invalid("payload schedule must satisfy 0 ≤ load ≤ unload ≤ duration".into()));
    }
    let mut env = scenario.env(protocol.seed, false)?;
    let command = CommandVector::new(protocol.walk_speed, 0.0, 0.0);
    env.set_command_override(Some(command));
    env.set_push_override(Some(Vec::new()));
    let dt = env.config().control_dt;
    let steps = (protocol.duration_s / dt).round() as usize;
    let (load_step, unload_step) = ((protocol.load_s / dt).round() as usize, (protocol.unload_s / dt).round() as usize);
    let mut series = PayloadSeries { samples: Vec::with_capacity(steps), fell_at: None };
    let mut loaded = false;
    for k in 0..steps {
        if protocol.payload_kg != 0.0 {
            if k == load_step && !loaded {
                env.add_trunk_mass(protocol.payload_kg)?;
                loaded = true;
            } else if k == unload_step && loaded {
                env.add_trunk_mass(-protocol.payload_kg)?;
                loaded = false;
            }
        }
        let in_window = k >= load_step && k < unload_step;
        let obs = env.observe();
        let info = env.step(&controller.action(&obs))?;
        let v = local_planar_velocity(&env);
        let mut kp_leg = [0.0; NUM_LEGS];
        for (leg, kp) in kp_leg.iter_mut().enumerate() {
            *kp = (0..JOINTS_PER_LEG).map(|g| info.gains.kp[joint_index(leg, g)]).sum::<f64>() / JOINTS_PER_LEG as f64;
        }
        series.samples.push(PayloadSample {
            time_s: env.time(),
            loaded: in_window,
            kp_leg,
            base_height: env.state().base_position.z,
            tracking_error: (command.v_xy[0] - v[0]).hypot(command.v_xy[1] - v[1]),
        });
        if info.status.is_terminated() {
            series.fell_at = Some(env.time());
            break;
        }
    }
    Ok(series)
}
