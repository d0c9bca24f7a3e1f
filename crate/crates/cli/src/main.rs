use std::fmt::Display;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use conflictsim::injectors::{FaultKind, SignatureSetup, KIND_NAMES};
use conflictsim::output::{format_sig9, parse_manifest, render_manifest, write_timeseries_csv};
use conflictsim::plot::emit_fault_signature_plots;
use conflictsim::risk::Grade;
use conflictsim::sim::peak_sample;
use conflictsim::{parse_scenario, run_scenario_indexed, Error, ParseMode, ScenarioConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Human-AI conflict scenario simulator.
#[derive(Parser)]
#[command(name = "conflictsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or a manifest.toml from an earlier run.
    #[arg(long)]
    scenario: PathBuf,
    /// Treat unknown keys as errors instead of warnings.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print a summary.
    Validate {
        #[command(flatten)]
        input: ScenarioArgs,
    },
    /// Simulate a scenario and write timeseries.csv and manifest.toml.
    Run {
        #[command(flatten)]
        input: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed; the manifest records the effective one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run once per value of one parameter, e.g. `--param faults.0.kind.delta=0,1,2`.
    Sweep {
        #[command(flatten)]
        input: ScenarioArgs,
        #[arg(long)]
        param: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write one VOD signature SVG per fault kind.
    Plot {
        /// Comma-separated kind names, or `all`.
        #[arg(long, default_value = "all")]
        kinds: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Display) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. }
            | Error::CompositionAmbiguity { .. }
            | Error::StateCorruption(_)
            | Error::Dimension { .. }
            | Error::Timestamp { .. } => EXIT_RUNTIME,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

fn report(label: &str, message: &str) {
    if use_color() {
        let color = if label == "error" { "31" } else { "33" };
        eprintln!("\x1b[1;{color}m{label}\x1b[0m: {message}");
    } else {
        eprintln!("{label}: {message}");
    }
}

/// A scenario plus the random stream index to run it with. Manifests carry
/// their own stream index so a replay reproduces the original bytes.
struct Loaded {
    config: ScenarioConfig,
    run_index: u64,
}

fn load(input: &ScenarioArgs) -> Result<Loaded, Failure> {
    let path = &input.scenario;
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let in_context = |f: Failure| Failure {
        message: format!("{}: {}", path.display(), f.message),
        ..f
    };

    let is_manifest = text
        .parse::<toml::Table>()
        .map(|t| t.contains_key("tool") && t.get("scenario").is_some_and(toml::Value::is_table))
        .unwrap_or(false);
    if is_manifest {
        let (config, run_index) = parse_manifest(&text).map_err(|e| in_context(e.into()))?;
        return Ok(Loaded { config, run_index });
    }

    let mode = if input.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let parsed = parse_scenario(&text, mode).map_err(|e| in_context(e.into()))?;
    for key in &parsed.warnings {
        report("warning", &format!("{}: unknown key `{key}` ignored", path.display()));
    }
    Ok(Loaded {
        config: parsed.config,
        run_index: 0,
    })
}

fn with_seed(mut config: ScenarioConfig, seed: Option<u64>) -> ScenarioConfig {
    if let Some(seed) = seed {
        config.clock.seed = seed;
    }
    config
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))
}

/// Peak VOD distance and the peak-risk sample's risk and grade.
struct RunSummary {
    peak_d_vod: f64,
    peak_risk: f64,
    peak_t: f64,
    grade: Grade,
}

fn execute(config: &ScenarioConfig, run_index: u64, out: &Path) -> Result<RunSummary, Failure> {
    create_dir(out)?;
    let records = run_scenario_indexed(config, run_index)?;
    write_timeseries_csv(&records, &out.join("timeseries.csv"))?;
    let manifest = render_manifest(config, run_index)?;
    let manifest_path = out.join("manifest.toml");
    fs::write(&manifest_path, manifest)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", manifest_path.display())))?;

    let peak = peak_sample(&records).expect("validated scenarios have at least one step");
    Ok(RunSummary {
        peak_d_vod: records.iter().map(|r| r.sample.d_vod).fold(0.0, f64::max),
        peak_risk: peak.risk,
        peak_t: peak.t,
        grade: peak.grade,
    })
}

fn cmd_validate(input: &ScenarioArgs) -> Result<(), Failure> {
    let Loaded { config, .. } = load(input)?;
    println!(
        "OK: {}: n = {}, p = {}, {} steps of {} s, {} fault(s), seed {}",
        input.scenario.display(),
        config.n(),
        config.p(),
        config.clock.steps(),
        config.clock.dt,
        config.faults.len(),
        config.clock.seed
    );
    Ok(())
}

fn cmd_run(input: &ScenarioArgs, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let loaded = load(input)?;
    let config = with_seed(loaded.config, seed);
    let summary = execute(&config, loaded.run_index, out)?;
    println!("wrote {}", out.join("timeseries.csv").display());
    println!("wrote {}", out.join("manifest.toml").display());
    println!(
        "peak R = {} ({}) at t = {}",
        format_sig9(summary.peak_risk),
        summary.grade,
        format_sig9(summary.peak_t)
    );
    Ok(())
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>), Failure> {
    let (path, list) = spec
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("--param `{spec}`: expected <path>=<v1,v2,...>")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Failure::config("--param: empty parameter path"));
    }
    let mut values = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = item
            .parse()
            .map_err(|_| Failure::config(format!("--param: `{item}` is not a number")))?;
        if !v.is_finite() {
            return Err(Failure::config(format!("--param: `{item}` is not finite")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Failure::config(format!("--param `{path}`: no values to sweep")));
    }
    values.sort_by(f64::total_cmp);
    Ok((path.to_string(), values))
}

fn cmd_sweep(input: &ScenarioArgs, param: &str, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let (path, values) = parse_sweep(param)?;
    let base = with_seed(load(input)?.config, seed);
    let configs = values
        .iter()
        .map(|&v| base.with_override(&path, v))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(out)?;

    let results: Vec<Result<RunSummary, Failure>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| execute(cfg, i as u64, &out.join(format!("run_{i:03}"))))
        .collect();

    let mut summary = String::from("value,peak_d_vod,peak_R,grade\n");
    let mut worst: Option<Failure> = None;
    for (i, (value, result)) in values.iter().zip(results).enumerate() {
        match result {
            Ok(s) => summary.push_str(&format!(
                "{},{},{},{}\n",
                format_sig9(*value),
                format_sig9(s.peak_d_vod),
                format_sig9(s.peak_risk),
                s.grade
            )),
            Err(f) => {
                report("error", &format!("run_{i:03} ({path} = {value}): {}", f.message));
                if worst.as_ref().is_none_or(|w| f.code > w.code) {
                    worst = Some(f);
                }
            }
        }
    }
    let summary_path = out.join("summary.csv");
    fs::write(&summary_path, &summary)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", summary_path.display())))?;
    print!("{summary}");
    println!("wrote {}", summary_path.display());
    match worst {
        Some(f) => Err(Failure {
            message: "one or more sweep runs failed".into(),
            ..f
        }),
        None => Ok(()),
    }
}

fn parse_kinds(spec: &str) -> Result<Vec<FaultKind>, Failure> {
    let names: Vec<&str> = if spec.trim() == "all" {
        KIND_NAMES.to_vec()
    } else {
        spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    };
    if names.is_empty() {
        return Err(Failure::config("--kinds: no fault kinds given"));
    }
    names
        .iter()
        .map(|name| {
            FaultKind::schematic(name).ok_or_else(|| {
                Failure::config(format!(
                    "unknown fault kind `{name}`; valid kinds: {}, all",
                    KIND_NAMES.join(", ")
                ))
            })
        })
        .collect()
}

fn cmd_plot(kinds: &str, out: &Path) -> Result<(), Failure> {
    let kinds = parse_kinds(kinds)?;
    for path in emit_fault_signature_plots(&kinds, &SignatureSetup::default(), out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { input } => cmd_validate(input),
        Command::Run { input, out, seed } => cmd_run(input, out, *seed),
        Command::Sweep {
            input,
            param,
            out,
            seed,
        } => cmd_sweep(input, param, out, *seed),
        Command::Plot { kinds, out } => cmd_plot(kinds, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report("error", &f.message);
            ExitCode::from(f.code)
        }
    }
}
