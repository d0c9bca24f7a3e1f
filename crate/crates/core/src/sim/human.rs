use serde::{Deserialize, Serialize};

use super::pid::{pid_control, PidParams, PidState};
use crate::error::{Error, Result};

/// Scripted behaviour of the human operator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HumanPolicy {
    /// Applies the controller's PID law to the human's own observation.
    #[default]
    MirrorPid,
    /// Applies `manual_output` whenever `|setpoint - observed| > threshold`.
    ThresholdManual { threshold: f64, manual_output: f64 },
    /// Supervises without acting.
    Inactive,
}

impl HumanPolicy {
    pub fn validate(&self) -> Result<()> {
        if let HumanPolicy::ThresholdManual {
            threshold,
            manual_output,
        } = *self
        {
            if !(threshold >= 0.0 && threshold.is_finite()) {
                return Err(Error::param("threshold", "must be finite and >= 0"));
            }
            if !manual_output.is_finite() {
                return Err(Error::param("manual_output", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Controller law and state the human uses under [`HumanPolicy::MirrorPid`].
#[derive(Debug, Clone, Copy)]
pub struct PidContext<'a> {
    pub params: &'a PidParams,
    pub state: PidState,
    pub dt: f64,
}

/// The human's actuator command for one step, plus the updated PID state
/// (unchanged for policies that do not use it).
pub fn human_action(observed: f64, policy: &HumanPolicy, ctx: PidContext<'_>) -> Result<(f64, PidState)> {
    match *policy {
        HumanPolicy::MirrorPid => pid_control(observed, ctx.params, ctx.state, ctx.dt),
        HumanPolicy::ThresholdManual {
            threshold,
            manual_output,
        } => {
            if !observed.is_finite() {
                return Err(Error::StateCorruption(format!(
                    "non-finite human observation {observed}"
                )));
            }
            let u = if (ctx.params.setpoint - observed).abs() > threshold {
                manual_output
            } else {
                0.0
            };
            Ok((u, ctx.state))
        }
        HumanPolicy::Inactive => Ok((0.0, ctx.state)),
    }
}
