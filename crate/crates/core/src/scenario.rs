//! Scenario files: a TOML document describing the plant, controller, human
//! policy, faults and risk settings of one run.
//!
//! Parsing fills every default and validates every invariant, so the
//! resulting [`ScenarioConfig`] is complete; serializing it writes all fields
//! explicitly and parsing that text again yields an identical config.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::injectors::{FaultSpec, SensorRange};
use crate::metrics::Interpreter;
use crate::risk::{Aggregate, GradeScale, RiskConfig};
use crate::sim::{HumanPolicy, PidParams, ProcessModel};

pub const SCHEMA_VERSION: u32 = 1;

/// Time base and random seed of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub dt: f64,
    pub duration: f64,
    #[serde(default, with = "seed_repr")]
    pub seed: u64,
}

impl SimClock {
    /// Number of samples in a run: `round(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::param("duration", "must be finite and >= dt"));
        }
        Ok(())
    }
}

/// TOML integers are signed; seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use super::*;

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| serde::de::Error::custom("seed must be >= 0")),
            Repr::Text(s) => s
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("seed `{s}` is not an unsigned 64-bit integer"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanConfig {
    pub policy: HumanPolicy,
    /// Whole steps between what the human sees and what the human acts on.
    pub latency_steps: usize,
}

/// Whose command drives the plant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActingParty {
    #[default]
    Ai,
    Human,
    /// `u = ai_weight * u_A + (1 - ai_weight) * u_H`.
    Blend {
        ai_weight: f64,
    },
}

impl ActingParty {
    pub fn applied(&self, u_a: f64, u_h: f64) -> f64 {
        match *self {
            ActingParty::Ai => u_a,
            ActingParty::Human => u_h,
            ActingParty::Blend { ai_weight } => ai_weight * u_a + (1.0 - ai_weight) * u_h,
        }
    }
}

/// A complete, validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub clock: SimClock,
    pub process: ProcessModel,
    pub pid: PidParams,
    pub human: HumanConfig,
    pub acting_party: ActingParty,
    pub sensor_ranges: Vec<SensorRange>,
    pub interpretation: Interpreter,
    pub risk: RiskConfig,
    pub grades: GradeScale,
    pub faults: Vec<FaultSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Unknown keys are reported as warnings.
    #[default]
    Lenient,
    /// Unknown keys are errors.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub config: ScenarioConfig,
    /// Dotted paths of keys that were ignored.
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct RawScenario {
    #[serde(default = "default_schema")]
    schema_version: i64,
    clock: SimClock,
    process: RawProcess,
    #[serde(default)]
    pid: PidParams,
    #[serde(default)]
    human: HumanConfig,
    #[serde(default)]
    acting_party: ActingParty,
    sensor_ranges: Option<Vec<SensorRange>>,
    #[serde(default)]
    interpretation: RawInterpretation,
    #[serde(default)]
    risk: RiskConfig,
    grades: Option<GradeScale>,
    #[serde(default)]
    faults: Vec<FaultSpec>,
}

fn default_schema() -> i64 {
    SCHEMA_VERSION as i64
}

#[derive(Deserialize)]
struct RawProcess {
    #[serde(default = "unit_gain")]
    gain: f64,
    time_constant: f64,
    initial_values: Vec<f64>,
    input_map: Option<Vec<usize>>,
}

fn unit_gain() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(default)]
struct RawInterpretation {
    variable: usize,
    boundaries: Option<Vec<f64>>,
    sharpness: f64,
}

impl Default for RawInterpretation {
    fn default() -> Self {
        RawInterpretation {
            variable: 0,
            boundaries: None,
            sharpness: 1.0,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn toml_error(text: &str, err: &toml::de::Error, syntax: bool) -> Error {
    let (line, column) = err.span().map_or((0, 0), |span| line_column(text, span.start));
    let message = err.message().trim().to_string();
    if syntax {
        Error::Syntax { line, column, message }
    } else {
        Error::config(format!("line {line}, column {column}"), message)
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str, mode: ParseMode) -> Result<ParsedScenario> {
    // Separate malformed TOML from well-formed TOML with the wrong shape.
    text.parse::<toml::Table>().map_err(|e| toml_error(text, &e, true))?;

    let mut warnings = Vec::new();
    let raw: RawScenario = serde_ignored::deserialize(
        toml::Deserializer::parse(text).map_err(|e| toml_error(text, &e, true))?,
        |path| warnings.push(path.to_string()),
    )
    .map_err(|e| toml_error(text, &e, false))?;

    if mode == ParseMode::Strict {
        if let Some(first) = warnings.first() {
            return Err(Error::UnknownKey(first.clone()));
        }
    }
    Ok(ParsedScenario {
        config: resolve(raw)?,
        warnings,
    })
}

/// Write a config as a scenario document with every field explicit.
pub fn serialize_scenario(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::config("<document>", e.to_string()))
}

/// Rename a component's parameter error so it names the config field.
fn at(prefix: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Parameter { name, reason } => Error::config(format!("{prefix}.{name}"), reason),
        other => other,
    })
}

fn fault_label(index: usize, spec: &FaultSpec) -> String {
    match &spec.name {
        Some(name) => format!("fault #{index} \"{name}\" ({})", spec.kind.name()),
        None => format!("fault #{index} ({})", spec.kind.name()),
    }
}

fn resolve(raw: RawScenario) -> Result<ScenarioConfig> {
    if raw.schema_version != SCHEMA_VERSION as i64 {
        return Err(Error::config(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
        ));
    }
    let n = raw.process.initial_values.len();
    let process = ProcessModel {
        gain: raw.process.gain,
        time_constant: raw.process.time_constant,
        input_map: raw.process.input_map.unwrap_or_else(|| vec![0; n]),
        initial_values: raw.process.initial_values,
    };
    let sensor_ranges = raw.sensor_ranges.unwrap_or_else(|| vec![SensorRange::default(); n]);

    let interpretation = Interpreter {
        variable: raw.interpretation.variable,
        boundaries: match raw.interpretation.boundaries {
            Some(b) => b,
            None => {
                // Low / normal / high band around the setpoint.
                let width = sensor_ranges
                    .get(raw.interpretation.variable)
                    .map_or(SensorRange::default().width(), SensorRange::width);
                vec![raw.pid.setpoint - 0.1 * width, raw.pid.setpoint + 0.1 * width]
            }
        },
        sharpness: raw.interpretation.sharpness,
    };

    at("risk", raw.risk.validate())?;
    let grades = match raw.grades {
        Some(g) => g,
        None => {
            let d_max = match raw.risk.aggregate {
                Aggregate::Vod => raw.risk.vod.d_max,
                Aggregate::Vid => raw.risk.vid.d_max,
                Aggregate::Vad => raw.risk.vad.d_max,
                Aggregate::Max => raw.risk.vod.d_max.max(raw.risk.vid.d_max).max(raw.risk.vad.d_max),
            };
            GradeScale::quartiles(d_max).map_err(|e| Error::config("grades", e.to_string()))?
        }
    };

    let config = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        clock: raw.clock,
        process,
        pid: raw.pid,
        human: raw.human,
        acting_party: raw.acting_party,
        sensor_ranges,
        interpretation,
        risk: raw.risk,
        grades,
        faults: raw.faults,
    };
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    pub fn n(&self) -> usize {
        self.process.n()
    }

    pub fn p(&self) -> usize {
        self.process.p()
    }

    /// Check every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        at("clock", self.clock.validate())?;
        at("process", self.process.validate())?;
        if self.clock.dt > self.process.time_constant {
            return Err(Error::config(
                "clock.dt",
                format!(
                    "dt = {} exceeds process.time_constant = {}; the Euler step would overshoot",
                    self.clock.dt, self.process.time_constant
                ),
            ));
        }
        at("pid", self.pid.validate())?;
        at("human.policy", self.human.policy.validate())?;
        if let ActingParty::Blend { ai_weight } = self.acting_party {
            if !(0.0..=1.0).contains(&ai_weight) {
                return Err(Error::config("acting_party.ai_weight", "must lie in [0, 1]"));
            }
        }

        let n = self.n();
        if self.sensor_ranges.len() != n {
            return Err(Error::config(
                "sensor_ranges",
                format!(
                    "{} ranges given for n = {n} process variables",
                    self.sensor_ranges.len()
                ),
            ));
        }
        for (i, r) in self.sensor_ranges.iter().enumerate() {
            at(&format!("sensor_ranges[{i}]"), r.validate())?;
        }
        at("interpretation", self.interpretation.validate(n))?;
        at("risk", self.risk.validate())?;
        at("grades", self.grades.validate())?;

        for (i, fault) in self.faults.iter().enumerate() {
            fault.validate(n).map_err(|e| match e {
                Error::Parameter { name, reason } => {
                    let field = if matches!(name, "variable" | "t0" | "t_end") {
                        format!("faults[{i}].{name}")
                    } else {
                        format!("faults[{i}].kind.{name}")
                    };
                    Error::config(field, format!("{}: {reason}", fault_label(i, fault)))
                }
                other => other,
            })?;
        }
        for (i, a) in self.faults.iter().enumerate() {
            for (j, b) in self.faults.iter().enumerate().skip(i + 1) {
                if a.kind.is_overriding()
                    && b.kind.is_overriding()
                    && a.variable == b.variable
                    && a.channel.participant() == b.channel.participant()
                    && a.overlaps(b)
                {
                    return Err(Error::config(
                        format!("faults[{j}]"),
                        format!(
                            "{} and {} both override variable {} during overlapping windows",
                            fault_label(i, a),
                            fault_label(j, b),
                            a.variable
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy of this config with the value at dotted `path` (array elements
    /// addressed by index, e.g. `faults.0.kind.delta`) replaced by `value`.
    pub fn with_override(&self, path: &str, value: f64) -> Result<ScenarioConfig> {
        let text = serialize_scenario(self)?;
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(path, e.to_string()))?;

        let mut segments = path.split('.');
        let mut node: &mut toml::Value = {
            let first = segments
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::config(path, "empty parameter path"))?;
            doc.get_mut(first)
                .ok_or_else(|| Error::config(path, format!("unknown key `{first}`")))?
        };
        for seg in segments {
            node = match node {
                toml::Value::Table(t) => t.get_mut(seg),
                toml::Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| Error::config(path, format!("cannot resolve `{seg}`")))?;
        }
        *node = match node {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => {
                toml::Value::Integer(value as i64)
            }
            toml::Value::Integer(_) => return Err(Error::config(path, format!("expects an integer, got {value}"))),
            _ => return Err(Error::config(path, "is not a numeric parameter")),
        };

        let updated = toml::to_string(&doc).map_err(|e| Error::config(path, e.to_string()))?;
        Ok(parse_scenario(&updated, ParseMode::Strict)?.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injectors::{FaultChannel, FaultKind};

    const MINIMAL: &str = r#"
[clock]
dt = 0.5
duration = 10.0

[process]
time_constant = 5.0
initial_values = [0.0]
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let parsed = parse_scenario(MINIMAL, ParseMode::Strict).unwrap();
        let c = parsed.config;
        assert!(parsed.warnings.is_empty());
        assert_eq!(c.schema_version, 1);
        assert_eq!(c.clock.seed, 0);
        assert_eq!(c.process.gain, 1.0);
        assert_eq!(c.process.input_map, vec![0]);
        assert_eq!(c.pid, PidParams::default());
        assert_eq!(c.human.policy, HumanPolicy::MirrorPid);
        assert_eq!(c.acting_party, ActingParty::Ai);
        assert_eq!(c.sensor_ranges, vec![SensorRange::default()]);
        assert_eq!(c.interpretation.boundaries, vec![1.0 - 200.0, 1.0 + 200.0]);
        assert_eq!(c.risk, RiskConfig::default());
        assert_eq!(c.grades, GradeScale::quartiles(1.0).unwrap());
        assert!(c.faults.is_empty());
        assert_eq!(c.clock.steps(), 20);
    }

    #[test]
    fn serialized_defaults_round_trip() {
        let c = parse_scenario(MINIMAL, ParseMode::Strict).unwrap().config;
        let text = serialize_scenario(&c).unwrap();
        let again = parse_scenario(&text, ParseMode::Strict).unwrap().config;
        assert_eq!(c, again);
        assert_eq!(text, serialize_scenario(&again).unwrap());
    }

    #[test]
    fn fault_window_error_names_the_fault() {
        let doc = format!(
            "{MINIMAL}\n[[faults]]\nname = \"late bias\"\nchannel = \"ai_sensor_fault\"\nvariable = 0\nt0 = 5.0\nt_end = 4.0\nkind = {{ type = \"bias\", delta = 1.0 }}\n"
        );
        let err = parse_scenario(&doc, ParseMode::Lenient).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("faults[0].t_end"), "{msg}");
        assert!(msg.contains("late bias"), "{msg}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scenario("[clock]\ndt = = 1\n", ParseMode::Lenient).unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_config_error() {
        let err = parse_scenario("[clock]\ndt = 1.0\nduration = 2.0\n", ParseMode::Lenient).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err:?}");
        assert!(err.to_string().contains("process"));
    }

    #[test]
    fn unknown_keys_warn_or_fail() {
        let doc = format!("{MINIMAL}\n[pid]\nkp = 2.0\nkq = 1.0\n");
        let parsed = parse_scenario(&doc, ParseMode::Lenient).unwrap();
        assert_eq!(parsed.warnings, vec!["pid.kq".to_string()]);
        assert_eq!(parsed.config.pid.kp, 2.0);
        assert!(matches!(
            parse_scenario(&doc, ParseMode::Strict),
            Err(Error::UnknownKey(k)) if k == "pid.kq"
        ));
    }

    #[test]
    fn unknown_policy_kind_is_rejected() {
        let doc = format!("{MINIMAL}\n[human]\npolicy = {{ type = \"telepathy\" }}\n");
        assert!(parse_scenario(&doc, ParseMode::Lenient).is_err());
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let doc = format!("schema_version = 2\n{MINIMAL}");
        let err = parse_scenario(&doc, ParseMode::Lenient).unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn rejects_overlapping_overrides() {
        let doc = format!(
            "{MINIMAL}
[[faults]]
channel = \"ai_sensor_fault\"
variable = 0
t0 = 1.0
kind = {{ type = \"open_circuit\" }}

[[faults]]
channel = \"ai_cyberattack\"
variable = 0
t0 = 3.0
kind = {{ type = \"stuck\" }}
"
        );
        let err = parse_scenario(&doc, ParseMode::Lenient).unwrap_err();
        assert!(err.to_string().contains("override"), "{err}");
    }

    #[test]
    fn rejects_coarse_dt() {
        let doc = MINIMAL.replace("time_constant = 5.0", "time_constant = 0.25");
        let err = parse_scenario(&doc, ParseMode::Lenient).unwrap_err();
        assert!(err.to_string().contains("clock.dt"));
    }

    #[test]
    fn large_seed_round_trips() {
        let mut c = parse_scenario(MINIMAL, ParseMode::Strict).unwrap().config;
        c.clock.seed = u64::MAX;
        let text = serialize_scenario(&c).unwrap();
        assert_eq!(parse_scenario(&text, ParseMode::Strict).unwrap().config, c);
    }

    #[test]
    fn override_resolves_nested_paths() {
        let mut c = parse_scenario(MINIMAL, ParseMode::Strict).unwrap().config;
        c.faults.push(FaultSpec::new(
            FaultKind::Bias {
                delta: 1.0,
                sign: Default::default(),
            },
            FaultChannel::AiSensorFault,
            0,
            2.0,
        ));
        let o = c.with_override("faults.0.kind.delta", 2.5).unwrap();
        assert!(matches!(o.faults[0].kind, FaultKind::Bias { delta, .. } if delta == 2.5));
        let o = c.with_override("clock.seed", 42.0).unwrap();
        assert_eq!(o.clock.seed, 42);
        assert!(c.with_override("clock.seed", 1.5).is_err());
        assert!(c.with_override("nope.value", 1.0).is_err());
        assert!(c.with_override("faults.3.t0", 1.0).is_err());
        assert!(c.with_override("human.policy.type", 1.0).is_err());
        // validation still applies
        assert!(c.with_override("faults.0.kind.delta", -1.0).is_err());
    }
}
