//! Discrete-time plant, controller and scripted human operator, plus the
//! per-step observe / interpret / act pipeline.

mod human;
mod pid;
mod process;
mod runner;

pub use human::{human_action, HumanPolicy, PidContext};
pub use pid::{pid_control, PidParams, PidState};
pub use process::{step_process, ProcessModel, TrueState};
pub use runner::{peak_sample, run_scenario, run_scenario_indexed, ConflictSample, TimeSeriesRecord};
