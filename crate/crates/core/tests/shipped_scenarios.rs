use std::path::Path;

use conflictsim::risk::Grade;
use conflictsim::sim::peak_sample;
use conflictsim::{parse_scenario, run_scenario, ParseMode, ScenarioConfig};

fn load(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = parse_scenario(&text, ParseMode::Strict).unwrap();
    assert!(parsed.warnings.is_empty(), "{name}: {:?}", parsed.warnings);
    parsed.config
}

#[test]
fn fault_free_has_zero_risk() {
    let records = run_scenario(&load("fault_free.toml")).unwrap();
    let peak = peak_sample(&records).unwrap();
    assert_eq!(peak.risk, 0.0);
    assert_eq!(peak.grade, Grade::Low);
}

#[test]
fn sustained_bias_saturates_probability() {
    let records = run_scenario(&load("bias.toml")).unwrap();
    let late: Vec<_> = records.iter().filter(|r| r.sample.t >= 100.0).collect();
    assert!(!late.is_empty());
    for r in late {
        assert!((r.sample.d_vod - 2.0).abs() < 1e-12);
        assert_eq!(r.sample.probability, 1.0);
    }
    assert_eq!(peak_sample(&records).unwrap().probability, 1.0);
}

#[test]
fn multi_fault_produces_conflict() {
    let cfg = load("multi_fault.toml");
    assert_eq!((cfg.n(), cfg.p()), (4, 2));
    let records = run_scenario(&cfg).unwrap();
    assert_eq!(records.len(), 3000);
    let peak = peak_sample(&records).unwrap();
    assert!(peak.risk > 0.0);
    assert!(records.iter().all(|r| r.sample.risk.is_finite()));
}

#[test]
fn bias_override_sets_peak_vod() {
    let base = load("bias.toml");
    for delta in [0.0, 1.0, 2.0] {
        let cfg = base.with_override("faults.0.kind.delta", delta).unwrap();
        let records = run_scenario(&cfg).unwrap();
        let peak_vod = records.iter().map(|r| r.sample.d_vod).fold(0.0, f64::max);
        assert!((peak_vod - delta).abs() < 1e-12, "delta {delta}: {peak_vod}");
    }
    assert!(base.with_override("faults.0.kind.nope", 1.0).is_err());
    assert!(base.with_override("faults.5.kind.delta", 1.0).is_err());
}
