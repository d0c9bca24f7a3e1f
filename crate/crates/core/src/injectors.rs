//! Abnormal-situation models and their composition onto the two observation
//! channels.
//!
//! The AI channel observes `x_N + f_S + f_C` and the human channel observes
//! `x_N + f_H + f_I`. Each `f` is one of the fault kinds below, switched on at
//! `t0` and optionally off at `t_end`. Additive kinds (bias, cyclic, drift,
//! piecewise delay error) are summed onto the true value; overriding kinds
//! (open circuit, short circuit, stuck, pure delay) replace the result, and
//! the composed value is clamped into the sensor range.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, v: f64) -> f64 {
        match self {
            Sign::Plus => v,
            Sign::Minus => -v,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// `x_N(t) + e(t)` inside `[t0, t0 + tau]`, `x_N(t)` afterwards, with the
    /// error decaying linearly from `error_amplitude` to zero.
    #[default]
    Piecewise,
    /// Transport delay: `x_N(max(0, t - tau))`.
    PureDelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultKind {
    OpenCircuit,
    ShortCircuit,
    Stuck,
    Bias {
        delta: f64,
        #[serde(default)]
        sign: Sign,
    },
    Cyclic {
        amplitude: f64,
        period: f64,
        /// Standard deviation of optional zero-mean Gaussian noise added on
        /// top of the sinusoid.
        #[serde(default)]
        noise_std: f64,
    },
    Drift {
        slope: f64,
    },
    Delay {
        tau: f64,
        #[serde(default)]
        mode: DelayMode,
        #[serde(default)]
        error_amplitude: f64,
    },
}

/// Names accepted by [`FaultKind::schematic`], in table order.
pub const KIND_NAMES: [&str; 7] = [
    "open_circuit",
    "short_circuit",
    "stuck",
    "bias",
    "cyclic",
    "drift",
    "delay",
];

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::OpenCircuit => "open_circuit",
            FaultKind::ShortCircuit => "short_circuit",
            FaultKind::Stuck => "stuck",
            FaultKind::Bias { .. } => "bias",
            FaultKind::Cyclic { .. } => "cyclic",
            FaultKind::Drift { .. } => "drift",
            FaultKind::Delay { .. } => "delay",
        }
    }

    /// Representative parameters for signature plots.
    pub fn schematic(name: &str) -> Option<FaultKind> {
        Some(match name {
            "open_circuit" => FaultKind::OpenCircuit,
            "short_circuit" => FaultKind::ShortCircuit,
            "stuck" => FaultKind::Stuck,
            "bias" => FaultKind::Bias {
                delta: 5.0,
                sign: Sign::Plus,
            },
            "cyclic" => FaultKind::Cyclic {
                amplitude: 5.0,
                period: 20.0,
                noise_std: 0.0,
            },
            "drift" => FaultKind::Drift { slope: 0.1 },
            "delay" => FaultKind::Delay {
                tau: 20.0,
                mode: DelayMode::Piecewise,
                error_amplitude: 5.0,
            },
            _ => return None,
        })
    }

    /// Overriding kinds replace the observed value instead of adding to it.
    pub fn is_overriding(&self) -> bool {
        matches!(
            self,
            FaultKind::OpenCircuit
                | FaultKind::ShortCircuit
                | FaultKind::Stuck
                | FaultKind::Delay {
                    mode: DelayMode::PureDelay,
                    ..
                }
        )
    }

    /// How far back in time this fault needs the true signal.
    pub fn lookback(&self) -> f64 {
        match *self {
            FaultKind::Delay {
                tau,
                mode: DelayMode::PureDelay,
                ..
            } => tau,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        match *self {
            FaultKind::OpenCircuit | FaultKind::ShortCircuit | FaultKind::Stuck => Ok(()),
            FaultKind::Bias { delta, .. } => {
                finite("delta", delta)?;
                if delta < 0.0 {
                    return Err(Error::param("delta", "must be >= 0 (use sign = \"minus\")"));
                }
                Ok(())
            }
            FaultKind::Cyclic {
                amplitude,
                period,
                noise_std,
            } => {
                finite("amplitude", amplitude)?;
                finite("period", period)?;
                finite("noise_std", noise_std)?;
                if period <= 0.0 {
                    return Err(Error::param("period", "must be > 0"));
                }
                if noise_std < 0.0 {
                    return Err(Error::param("noise_std", "must be >= 0"));
                }
                Ok(())
            }
            FaultKind::Drift { slope } => finite("slope", slope),
            FaultKind::Delay {
                tau, error_amplitude, ..
            } => {
                finite("tau", tau)?;
                finite("error_amplitude", error_amplitude)?;
                if tau < 0.0 {
                    return Err(Error::param("tau", "must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

/// Which cause a fault models; this fixes the participant whose channel it
/// corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultChannel {
    AiSensorFault,
    AiCyberattack,
    HumanError,
    HumanSabotage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participant {
    Ai,
    Human,
}

impl FaultChannel {
    pub fn participant(self) -> Participant {
        match self {
            FaultChannel::AiSensorFault | FaultChannel::AiCyberattack => Participant::Ai,
            FaultChannel::HumanError | FaultChannel::HumanSabotage => Participant::Human,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub channel: FaultChannel,
    pub variable: usize,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub kind: FaultKind,
}

impl FaultSpec {
    pub fn new(kind: FaultKind, channel: FaultChannel, variable: usize, t0: f64) -> Self {
        FaultSpec {
            name: None,
            channel,
            variable,
            t0,
            t_end: None,
            kind,
        }
    }

    /// Active on the half-open window `[t0, t_end)`.
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t0 && self.t_end.is_none_or(|end| t < end)
    }

    /// Windows `[t0, t_end)` of the two faults intersect.
    pub fn overlaps(&self, other: &FaultSpec) -> bool {
        let end_a = self.t_end.unwrap_or(f64::INFINITY);
        let end_b = other.t_end.unwrap_or(f64::INFINITY);
        self.t0 < end_b && other.t0 < end_a
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.variable >= n {
            return Err(Error::param(
                "variable",
                format!("index {} out of range for n = {n}", self.variable),
            ));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(Error::param("t0", "must be finite and >= 0"));
        }
        if let Some(end) = self.t_end {
            if !(end > self.t0) || !end.is_finite() {
                return Err(Error::param("t_end", format!("must be finite and > t0 = {}", self.t0)));
            }
        }
        self.kind.validate()
    }
}

/// Finite measurement span of one sensor; stands in for an infinite reading
/// on short circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRange {
    pub min: f64,
    pub max: f64,
}

impl Default for SensorRange {
    fn default() -> Self {
        SensorRange {
            min: -1000.0,
            max: 1000.0,
        }
    }
}

impl SensorRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let r = SensorRange { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::param("sensor_range", "bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(Error::param("sensor_range", "min must be below max"));
        }
        Ok(())
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Recorded `(t, x_N)` samples of one true process variable.
#[derive(Debug, Clone, Default)]
pub struct History {
    samples: VecDeque<(f64, f64)>,
}

impl History {
    pub fn push(&mut self, t: f64, x: f64) {
        self.samples.push_back((t, x));
    }

    /// Drop samples that can no longer be the latest one at or before
    /// `keep_from`.
    pub fn prune_before(&mut self, keep_from: f64) {
        while self.samples.len() > 1 && self.samples[1].0 <= keep_from {
            self.samples.pop_front();
        }
    }

    /// Zero-order-hold lookup of the value at `target`. When `target` is
    /// older than the earliest sample, returns that sample and `true`.
    pub fn value_at(&self, target: f64) -> Option<(f64, bool)> {
        let tol = 1e-9 * (1.0 + target.abs());
        let idx = self.samples.partition_point(|&(t, _)| t <= target + tol);
        match idx {
            0 => self.samples.front().map(|&(_, x)| (x, true)),
            i => Some((self.samples[i - 1].1, false)),
        }
    }
}

/// Everything a single fault expression needs at one instant.
#[derive(Debug, Clone, Copy)]
pub struct FaultInput<'a> {
    pub t: f64,
    pub t0: f64,
    /// True value `x_N(t)`.
    pub x_n: f64,
    /// Channel value captured when the fault switched on.
    pub onset_value: Option<f64>,
    pub history: &'a History,
    pub range: SensorRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultEffect {
    Add(f64),
    Replace(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleFlags {
    /// A short-circuit reading (nominally infinite) was saturated to the
    /// sensor maximum.
    pub short_circuit: bool,
    /// A transport delay reached further back than the recorded history.
    pub delay_history_short: bool,
}

impl SampleFlags {
    pub fn merge(self, other: SampleFlags) -> SampleFlags {
        SampleFlags {
            short_circuit: self.short_circuit || other.short_circuit,
            delay_history_short: self.delay_history_short || other.delay_history_short,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultOutcome {
    pub effect: FaultEffect,
    pub flags: SampleFlags,
}

impl FaultOutcome {
    fn plain(effect: FaultEffect) -> Self {
        FaultOutcome {
            effect,
            flags: SampleFlags::default(),
        }
    }

    /// The observed value this fault alone would produce on top of `x_n`.
    pub fn observed(&self, x_n: f64) -> f64 {
        match self.effect {
            FaultEffect::Add(e) => x_n + e,
            FaultEffect::Replace(v) => v,
        }
    }
}

/// Evaluate one fault expression at `input.t >= input.t0`.
pub fn apply_fault(kind: &FaultKind, input: &FaultInput<'_>, rng: &mut impl Rng) -> Result<FaultOutcome> {
    let elapsed = input.t - input.t0;
    if elapsed < 0.0 {
        return Err(Error::param("t", "fault evaluated before onset"));
    }
    let outcome = match *kind {
        FaultKind::OpenCircuit => FaultOutcome::plain(FaultEffect::Replace(0.0)),
        FaultKind::ShortCircuit => FaultOutcome {
            effect: FaultEffect::Replace(input.range.max),
            flags: SampleFlags {
                short_circuit: true,
                ..SampleFlags::default()
            },
        },
        FaultKind::Stuck => {
            let held = input
                .onset_value
                .ok_or_else(|| Error::param("onset_value", "stuck fault needs the value captured at onset"))?;
            FaultOutcome::plain(FaultEffect::Replace(held))
        }
        FaultKind::Bias { delta, sign } => FaultOutcome::plain(FaultEffect::Add(sign.apply(delta))),
        FaultKind::Cyclic {
            amplitude,
            period,
            noise_std,
        } => {
            let mut e = amplitude * (2.0 * PI * elapsed / period).sin();
            if noise_std > 0.0 {
                let normal = Normal::new(0.0, noise_std).map_err(|err| Error::param("noise_std", err.to_string()))?;
                e += normal.sample(rng);
            }
            FaultOutcome::plain(FaultEffect::Add(e))
        }
        FaultKind::Drift { slope } => FaultOutcome::plain(FaultEffect::Add(slope * elapsed)),
        FaultKind::Delay {
            tau,
            mode: DelayMode::Piecewise,
            error_amplitude,
        } => {
            let e = if elapsed <= tau {
                let frac = if tau > 0.0 { elapsed / tau } else { 0.0 };
                error_amplitude * (1.0 - frac)
            } else {
                0.0
            };
            FaultOutcome::plain(FaultEffect::Add(e))
        }
        FaultKind::Delay {
            tau,
            mode: DelayMode::PureDelay,
            ..
        } => {
            let target = (input.t - tau).max(0.0);
            let (value, short) = input.history.value_at(target).unwrap_or((input.x_n, true));
            FaultOutcome {
                effect: FaultEffect::Replace(value),
                flags: SampleFlags {
                    delay_history_short: short,
                    ..SampleFlags::default()
                },
            }
        }
    };
    Ok(outcome)
}

/// One participant's composed observation at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReading {
    pub values: Vec<f64>,
    pub flags: SampleFlags,
}

/// Stateful observation channel of one participant: owns the recorded true
/// history, the values captured by stuck faults and the random stream.
#[derive(Debug, Clone)]
pub struct Channel {
    participant: Participant,
    /// (index in the scenario's fault list, spec)
    faults: Vec<(usize, FaultSpec)>,
    ranges: Vec<SensorRange>,
    histories: Vec<History>,
    captured: Vec<Option<f64>>,
    lookback: f64,
    rng: ChaCha8Rng,
}

impl Channel {
    /// Keeps only the faults in `faults` that belong to `participant`.
    pub fn new(
        participant: Participant,
        faults: &[FaultSpec],
        ranges: Vec<SensorRange>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let n = ranges.len();
        if n == 0 {
            return Err(Error::param("sensor_ranges", "need at least one variable"));
        }
        let mine: Vec<(usize, FaultSpec)> = faults
            .iter()
            .enumerate()
            .filter(|(_, f)| f.channel.participant() == participant)
            .map(|(i, f)| (i, f.clone()))
            .collect();
        for (_, f) in &mine {
            f.validate(n)?;
        }
        let lookback = mine.iter().map(|(_, f)| f.kind.lookback()).fold(0.0, f64::max);
        Ok(Channel {
            participant,
            captured: vec![None; mine.len()],
            faults: mine,
            histories: vec![History::default(); n],
            ranges,
            lookback,
            rng,
        })
    }

    pub fn participant(&self) -> Participant {
        self.participant
    }

    /// Record `x_n` at time `t` and return the composed observation.
    pub fn observe(&mut self, t: f64, x_n: &[f64]) -> Result<ChannelReading> {
        if x_n.len() != self.ranges.len() {
            return Err(Error::Dimension {
                expected: self.ranges.len(),
                actual: x_n.len(),
            });
        }
        for (h, &x) in self.histories.iter_mut().zip(x_n) {
            h.push(t, x);
            h.prune_before(t - self.lookback);
        }

        let Channel {
            faults,
            ranges,
            histories,
            captured,
            rng,
            ..
        } = self;
        let mut flags = SampleFlags::default();
        let mut values = Vec::with_capacity(x_n.len());
        for (var, &x) in x_n.iter().enumerate() {
            let range = ranges[var];
            let input = |t0: f64, onset_value: Option<f64>| FaultInput {
                t,
                t0,
                x_n: x,
                onset_value,
                history: &histories[var],
                range,
            };
            let applies = |spec: &FaultSpec| spec.variable == var && spec.is_active(t);

            let mut running = x;
            for (_, spec) in faults.iter().filter(|(_, s)| applies(s) && !s.kind.is_overriding()) {
                let outcome = apply_fault(&spec.kind, &input(spec.t0, None), rng)?;
                flags = flags.merge(outcome.flags);
                if let FaultEffect::Add(e) = outcome.effect {
                    running += e;
                }
            }

            let mut winner: Option<usize> = None;
            let mut observed = running;
            for (slot, (global, spec)) in faults.iter().enumerate() {
                if !applies(spec) || !spec.kind.is_overriding() {
                    continue;
                }
                if let Some(first) = winner {
                    return Err(Error::CompositionAmbiguity {
                        variable: var,
                        t,
                        first,
                        second: *global,
                    });
                }
                winner = Some(*global);
                if matches!(spec.kind, FaultKind::Stuck) && captured[slot].is_none() {
                    captured[slot] = Some(range.clamp(running));
                }
                let outcome = apply_fault(&spec.kind, &input(spec.t0, captured[slot]), rng)?;
                flags = flags.merge(outcome.flags);
                observed = outcome.observed(x);
            }

            values.push(range.clamp(observed));
        }
        Ok(ChannelReading { values, flags })
    }
}

/// Parameters of a single-fault VOD signature trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureSetup {
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    /// True signal is `baseline + baseline_slope * t`.
    pub baseline: f64,
    pub baseline_slope: f64,
    pub range: SensorRange,
    pub seed: u64,
}

impl Default for SignatureSetup {
    fn default() -> Self {
        SignatureSetup {
            t0: 100.0,
            horizon: 200.0,
            dt: 0.5,
            baseline: 50.0,
            baseline_slope: 0.05,
            range: SensorRange { min: 0.0, max: 100.0 },
            seed: 0,
        }
    }
}

/// `VOD(t) = x_A(t) - x_H(t)` for `kind` injected as a sensor fault on the
/// AI channel with a fault-free human channel, sampled every `dt` over
/// `[0, horizon]`.
pub fn vod_signature(kind: &FaultKind, setup: &SignatureSetup) -> Result<Vec<(f64, f64)>> {
    if !(setup.dt > 0.0) || !(setup.horizon >= setup.dt) {
        return Err(Error::param("dt", "need 0 < dt <= horizon"));
    }
    setup.range.validate()?;
    let faults = [FaultSpec::new(kind.clone(), FaultChannel::AiSensorFault, 0, setup.t0)];
    let rng = crate::rng::stream(setup.seed, 0);
    let mut ai = Channel::new(Participant::Ai, &faults, vec![setup.range], rng.clone())?;
    let mut human = Channel::new(Participant::Human, &faults, vec![setup.range], rng)?;

    let steps = (setup.horizon / setup.dt).round() as usize;
    (0..=steps)
        .map(|k| {
            let t = k as f64 * setup.dt;
            let x = [setup.baseline + setup.baseline_slope * t];
            let a = ai.observe(t, &x)?;
            let h = human.observe(t, &x)?;
            Ok((t, a.values[0] - h.values[0]))
        })
        .collect()
}
