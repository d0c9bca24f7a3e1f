use std::collections::VecDeque;

use super::human::{human_action, PidContext};
use super::pid::{pid_control, PidState};
use super::process::{step_process, TrueState};
use crate::error::{Error, Result};
use crate::injectors::{Channel, Participant, SampleFlags};
use crate::metrics::{
    classify, d_vad, d_vid_cross_entropy, softmax, ActionVector, ObservationVector, ProbabilityVector,
};
use crate::risk::{grade, Grade};
use crate::rng;
use crate::scenario::ScenarioConfig;

/// Conflict distances and risk at one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictSample {
    pub t: f64,
    pub d_vod: f64,
    pub d_vid: f64,
    pub d_vad: f64,
    pub probability: f64,
    pub severity: f64,
    pub risk: f64,
    pub grade: Grade,
}

/// Everything recorded at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub sample: ConflictSample,
    pub x_n: Vec<f64>,
    pub x_a: Vec<f64>,
    pub x_h: Vec<f64>,
    pub u_a: Vec<f64>,
    pub u_h: Vec<f64>,
    pub class_a: usize,
    pub class_h: usize,
    pub flags: SampleFlags,
}

/// Run with random stream 0. See [`run_scenario_indexed`].
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TimeSeriesRecord>> {
    run_scenario_indexed(config, 0)
}

/// Simulate `config.clock.steps()` samples at `t = k * dt`.
///
/// Each step observes the current true state through both channels,
/// interprets both observations, computes both actions, scores the three
/// distances, then advances the plant with the acting party's command.
/// `run_index` selects an independent random stream for the same seed.
pub fn run_scenario_indexed(config: &ScenarioConfig, run_index: u64) -> Result<Vec<TimeSeriesRecord>> {
    config.validate()?;
    let dt = config.clock.dt;
    let seed = config.clock.seed;
    let model = &config.process;
    let measured = model.measured_variables();
    let p = measured.len();

    let mut ai = Channel::new(
        Participant::Ai,
        &config.faults,
        config.sensor_ranges.clone(),
        rng::stream(seed, 2 * run_index),
    )?;
    let mut human = Channel::new(
        Participant::Human,
        &config.faults,
        config.sensor_ranges.clone(),
        rng::stream(seed, 2 * run_index + 1),
    )?;

    let mut state = TrueState::initial(model);
    let mut ai_pid = vec![PidState::default(); p];
    let mut human_pid = vec![PidState::default(); p];
    let mut seen_by_human: VecDeque<Vec<f64>> = VecDeque::with_capacity(config.human.latency_steps + 1);

    let steps = config.clock.steps();
    let mut records = Vec::with_capacity(steps);
    for step in 0..steps {
        let t = step as f64 * dt;
        state.t = t;
        let diverged = |reason: String| Error::Divergence { step, t, reason };

        let a = ai.observe(t, &state.x_n)?;
        let h = human.observe(t, &state.x_n)?;

        let interp = &config.interpretation;
        let p_a = softmax(&interp.scores(&a.values)?);
        let y_a = classify(&p_a);
        let y_h = interp.direct_class(&h.values);
        // agreeing one-hot classes mean no interpretation conflict
        let d_vid = if y_a == y_h {
            0.0
        } else {
            d_vid_cross_entropy(&p_a, &ProbabilityVector::from(&y_h), config.risk.epsilon)?
        };

        seen_by_human.push_back(h.values.clone());
        if seen_by_human.len() > config.human.latency_steps + 1 {
            seen_by_human.pop_front();
        }
        let human_view = seen_by_human.front().expect("pushed above");

        let mut u_a = Vec::with_capacity(p);
        let mut u_h = Vec::with_capacity(p);
        for (j, &var) in measured.iter().enumerate() {
            let (ua, next) =
                pid_control(a.values[var], &config.pid, ai_pid[j], dt).map_err(|e| diverged(e.to_string()))?;
            ai_pid[j] = next;
            let ctx = PidContext {
                params: &config.pid,
                state: human_pid[j],
                dt,
            };
            let (uh, next) =
                human_action(human_view[var], &config.human.policy, ctx).map_err(|e| diverged(e.to_string()))?;
            human_pid[j] = next;
            u_a.push(ua);
            u_h.push(uh);
        }

        let x_a = ObservationVector::new(a.values, t)?;
        let x_h = ObservationVector::new(h.values, t)?;
        let d_vod = config.risk.vod_metric.distance(&x_a, &x_h)?;
        let act_a = ActionVector::new(u_a, t).map_err(|e| diverged(e.to_string()))?;
        let act_h = ActionVector::new(u_h, t).map_err(|e| diverged(e.to_string()))?;
        let d_vad = d_vad(&act_a, &act_h)?;

        let assessment = config.risk.assess(d_vod, d_vid, d_vad)?;
        let sample = ConflictSample {
            t,
            d_vod,
            d_vid,
            d_vad,
            probability: assessment.probability,
            severity: assessment.severity,
            risk: assessment.risk,
            grade: grade(assessment.risk, &config.grades),
        };

        let applied: Vec<f64> = act_a
            .values
            .iter()
            .zip(&act_h.values)
            .map(|(&ua, &uh)| config.acting_party.applied(ua, uh))
            .collect();
        let next = step_process(&state, &applied, model, dt).map_err(|e| diverged(e.to_string()))?;

        records.push(TimeSeriesRecord {
            sample,
            x_n: std::mem::take(&mut state.x_n),
            x_a: x_a.values,
            x_h: x_h.values,
            u_a: act_a.values,
            u_h: act_h.values,
            class_a: y_a.class_index(),
            class_h: y_h.class_index(),
            flags: a.flags.merge(h.flags),
        });
        state = next;
    }
    Ok(records)
}

/// Largest-risk sample of a run (first one on ties).
pub fn peak_sample(records: &[TimeSeriesRecord]) -> Option<&ConflictSample> {
    records
        .iter()
        .map(|r| &r.sample)
        .fold(None, |best: Option<&ConflictSample>, s| match best {
            Some(b) if !(s.risk > b.risk) => Some(b),
            _ => Some(s),
        })
}
