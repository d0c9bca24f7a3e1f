use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gains, setpoint and actuator limits of a positional PID law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub setpoint: f64,
    pub output_min: f64,
    pub output_max: f64,
}

impl Default for PidParams {
    fn default() -> Self {
        PidParams {
            kp: 1.0,
            ki: 0.1,
            kd: 0.0,
            setpoint: 1.0,
            output_min: -10.0,
            output_max: 10.0,
        }
    }
}

impl PidParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("setpoint", self.setpoint),
            ("output_min", self.output_min),
            ("output_max", self.output_max),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.output_min >= self.output_max {
            return Err(Error::param("output_min", "must be below output_max"));
        }
        Ok(())
    }
}

/// Integrator and last error carried between PID evaluations.
///
/// `prev_error` is `None` before the first evaluation, which suppresses the
/// derivative kick on the first sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

/// One PID evaluation. The integrator is frozen whenever the unclamped output
/// would leave `[output_min, output_max]`.
pub fn pid_control(observed: f64, params: &PidParams, state: PidState, dt: f64) -> Result<(f64, PidState)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if !observed.is_finite() || !state.integral.is_finite() {
        return Err(Error::StateCorruption(format!(
            "non-finite PID input (observed={observed}, integral={})",
            state.integral
        )));
    }

    let error = params.setpoint - observed;
    let derivative = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    let pd = params.kp * error + params.kd * derivative;

    let candidate = state.integral + error * dt;
    let raw = pd + params.ki * candidate;
    let (u, integral) = if raw > params.output_max || raw < params.output_min {
        let held = pd + params.ki * state.integral;
        (held.clamp(params.output_min, params.output_max), state.integral)
    } else {
        (raw, candidate)
    };

    Ok((
        u,
        PidState {
            integral,
            prev_error: Some(error),
        },
    ))
}
