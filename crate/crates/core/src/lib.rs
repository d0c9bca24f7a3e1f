//! Deterministic simulator for conflicts between a human operator and an
//! automated controller sharing one process.
//!
//! Faults (sensor faults, cyberattacks, human errors, sabotage) are injected
//! into the AI and human observation channels. Each timestep the observation,
//! interpretation and action differences are measured as distances and mapped
//! to a conflict probability, severity, risk and grade.

// `!(x > y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod injectors;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod risk;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use scenario::{parse_scenario, serialize_scenario, ParseMode, ScenarioConfig};
pub use sim::{run_scenario, run_scenario_indexed, ConflictSample, TimeSeriesRecord};
