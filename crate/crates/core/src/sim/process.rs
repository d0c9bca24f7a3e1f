//! First-order-lag process plant under forward-Euler integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bank of `n` first-order lags sharing one gain and time constant.
///
/// Variable `i` is driven by actuator `input_map[i]`; the number of actuators
/// `p` is `max(input_map) + 1` and every actuator must drive at least one
/// variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub gain: f64,
    pub time_constant: f64,
    pub initial_values: Vec<f64>,
    pub input_map: Vec<usize>,
}

impl ProcessModel {
    /// Single-actuator model: every variable is driven by actuator 0.
    pub fn new(gain: f64, time_constant: f64, initial_values: Vec<f64>) -> Result<Self> {
        let n = initial_values.len();
        let model = ProcessModel {
            gain,
            time_constant,
            initial_values,
            input_map: vec![0; n],
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_input_map(mut self, input_map: Vec<usize>) -> Result<Self> {
        self.input_map = input_map;
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.initial_values.len()
    }

    pub fn p(&self) -> usize {
        self.input_map.iter().max().map_or(0, |m| m + 1)
    }

    /// The variable each actuator's controller measures: the lowest-index
    /// variable wired to that actuator.
    pub fn measured_variables(&self) -> Vec<usize> {
        (0..self.p())
            .map(|j| {
                self.input_map
                    .iter()
                    .position(|&a| a == j)
                    .expect("validated: every actuator drives a variable")
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain.is_finite() {
            return Err(Error::param("gain", "must be finite"));
        }
        if !(self.time_constant > 0.0 && self.time_constant.is_finite()) {
            return Err(Error::param("time_constant", "must be finite and > 0"));
        }
        if self.initial_values.is_empty() {
            return Err(Error::param("initial_values", "need at least one process variable"));
        }
        if self.initial_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("initial_values", "must be finite"));
        }
        if self.input_map.len() != self.n() {
            return Err(Error::param(
                "input_map",
                format!("length {} does not match n = {}", self.input_map.len(), self.n()),
            ));
        }
        for j in 0..self.p() {
            if !self.input_map.contains(&j) {
                return Err(Error::param(
                    "input_map",
                    format!("actuator {j} drives no process variable"),
                ));
            }
        }
        Ok(())
    }
}

/// Ground truth at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueState {
    pub t: f64,
    pub x_n: Vec<f64>,
    pub u_applied: Vec<f64>,
}

impl TrueState {
    pub fn initial(model: &ProcessModel) -> Self {
        TrueState {
            t: 0.0,
            x_n: model.initial_values.clone(),
            u_applied: vec![0.0; model.p()],
        }
    }
}

/// Advance the plant by one Euler step of `dt` with actuator vector `u`:
/// `x' = x + dt * (gain * u - x) / time_constant`.
pub fn step_process(state: &TrueState, u: &[f64], model: &ProcessModel, dt: f64) -> Result<TrueState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if u.len() != model.p() {
        return Err(Error::Dimension {
            expected: model.p(),
            actual: u.len(),
        });
    }
    if state.x_n.len() != model.n() {
        return Err(Error::Dimension {
            expected: model.n(),
            actual: state.x_n.len(),
        });
    }
    if let Some(bad) = u.iter().chain(&state.x_n).find(|v| !v.is_finite()) {
        return Err(Error::StateCorruption(format!("non-finite input value {bad}")));
    }

    let x_n: Vec<f64> = state
        .x_n
        .iter()
        .zip(&model.input_map)
        .map(|(&x, &j)| x + dt * (model.gain * u[j] - x) / model.time_constant)
        .collect();
    if let Some(i) = x_n.iter().position(|v| !v.is_finite()) {
        return Err(Error::StateCorruption(format!(
            "process variable {i} became non-finite"
        )));
    }

    Ok(TrueState {
        t: state.t + dt,
        x_n,
        u_applied: u.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag(x0: f64) -> ProcessModel {
        ProcessModel::new(1.0, 10.0, vec![x0]).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let model = ProcessModel::new(2.5, 3.0, vec![5.0]).unwrap();
        let s = TrueState::initial(&model);
        for dt in [0.01, 0.5, 3.0] {
            let next = step_process(&s, &[2.0], &model, dt).unwrap();
            assert_eq!(next.x_n[0], 5.0);
        }
    }

    #[test]
    fn single_step_substitution() {
        let model = lag(0.0);
        let next = step_process(&TrueState::initial(&model), &[1.0], &model, 0.1).unwrap();
        assert!((next.x_n[0] - 0.01).abs() < 1e-15);
        assert!((next.t - 0.1).abs() < 1e-15);
        assert_eq!(next.u_applied, vec![1.0]);
    }

    #[test]
    fn step_response_tracks_closed_form() {
        // x(t) = 1 - exp(-t / tau) for a unit step from rest.
        let model = lag(0.0);
        let mut s = TrueState::initial(&model);
        for _ in 0..1000 {
            s = step_process(&s, &[1.0], &model, 0.01).unwrap();
        }
        let exact = 1.0 - (-1.0f64).exp();
        assert!((s.x_n[0] - exact).abs() < 1e-3, "{} vs {}", s.x_n[0], exact);
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let model = lag(0.0);
        let s = TrueState::initial(&model);
        assert!(matches!(
            step_process(&s, &[f64::NAN], &model, 0.1),
            Err(Error::StateCorruption(_))
        ));
        let bad = TrueState {
            x_n: vec![f64::INFINITY],
            ..s.clone()
        };
        assert!(matches!(
            step_process(&bad, &[0.0], &model, 0.1),
            Err(Error::StateCorruption(_))
        ));
    }

    #[test]
    fn overflow_is_state_corruption() {
        let model = ProcessModel::new(1e308, 1.0, vec![0.0]).unwrap();
        let s = TrueState::initial(&model);
        assert!(matches!(
            step_process(&s, &[1e308], &model, 0.5),
            Err(Error::StateCorruption(_))
        ));
    }

    #[test]
    fn wiring_routes_actuators() {
        let model = ProcessModel::new(1.0, 1.0, vec![0.0, 0.0, 0.0])
            .unwrap()
            .with_input_map(vec![0, 1, 1])
            .unwrap();
        assert_eq!(model.p(), 2);
        assert_eq!(model.measured_variables(), vec![0, 1]);
        let next = step_process(&TrueState::initial(&model), &[1.0, -2.0], &model, 0.5).unwrap();
        assert_eq!(next.x_n, vec![0.5, -1.0, -1.0]);
        assert!(matches!(
            step_process(&TrueState::initial(&model), &[1.0], &model, 0.5),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_gapped_input_map() {
        let model = ProcessModel::new(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        assert!(model.with_input_map(vec![0, 2]).is_err());
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ProcessModel::new(1.0, 0.0, vec![0.0]).is_err());
        assert!(ProcessModel::new(1.0, 1.0, vec![]).is_err());
        assert!(ProcessModel::new(f64::NAN, 1.0, vec![0.0]).is_err());
    }
}
