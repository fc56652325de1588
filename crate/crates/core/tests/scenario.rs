mod common;

use wqc_core::error::ErrorKind;
use wqc_core::par::Execution;
use wqc_core::scenario::{
    export_report, load_inputs, prepare, run_batch, ControllerKind, ScenarioConfig,
};

fn short_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::load(&common::data("three-node.toml")).unwrap();
    cfg.time.duration_s = 4.0 * 3600.0;
    cfg
}

#[test]
fn zero_uncertainty_plant_is_the_model() {
    let mut cfg = short_config();
    cfg.uncertainty.demand_band = 0.0;
    cfg.uncertainty.reaction_band = 0.0;
    cfg.uncertainty.events.clear();
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let s = prepare(&cfg, net, hyd, Execution::Parallel).unwrap();
    assert_eq!(s.model.len(), 4);
    for (m, p) in s.model.iter().zip(&s.plant_systems) {
        assert_eq!(m.a, p.a);
        assert_eq!(m.b, p.b);
    }
}

#[test]
fn event_forces_the_plant() {
    let cfg = short_config();
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let report = prepare(&cfg, net, hyd, Execution::Parallel)
        .unwrap()
        .run(ControllerKind::Mpc)
        .unwrap();
    let j2 = report.series("J2").unwrap();
    let at = j2.iter().find(|(t, _)| *t == 12_000.0).unwrap();
    assert_eq!(at.1, 1.0);
    let recovery = report.recovery.iter().find(|r| r.entity == "J2").unwrap();
    assert_eq!(recovery.event_time_s, 12_000.0);
    assert!(recovery.recovery_s.is_some());
}

#[test]
fn metrics_are_nonnegative_and_exported() {
    let cfg = short_config();
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let s = prepare(&cfg, net, hyd, Execution::Parallel).unwrap();
    for kind in [ControllerKind::Mpc, ControllerKind::Rbc] {
        let report = s.run(kind).unwrap();
        let m = &report.metrics;
        assert!(m.reference_deviation >= 0.0);
        assert!(m.smoothness >= 0.0);
        assert!(m.chlorine_cost_usd >= 0.0);
        let sum = m.reference_deviation + m.smoothness + m.chlorine_cost_usd;
        assert!((m.total - sum).abs() <= 1e-9 * sum.max(1.0));
        assert_eq!(m.wall_ms_per_control_step, 0.0);
        assert_eq!(report.controls.len(), s.control_steps);
        for c in &report.controls {
            assert!(c.u.iter().all(|u| *u >= 0.0));
        }

        let dir = tempfile::tempdir().unwrap();
        export_report(&report, dir.path()).unwrap();
        for f in ["trajectories.csv", "controls.csv", "metrics.json", "recovery.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(dir.path().join("plotseries").join("J2.csv").exists());
        let metrics: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
                .unwrap();
        assert!(metrics["total"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn batch_runs_match_individual_runs() {
    let mut a = short_config();
    a.time.duration_s = 3600.0;
    a.uncertainty.events.clear();
    let mut b = a.clone();
    b.seed = 7;
    let cfgs = vec![a, b];
    let par = run_batch(&cfgs, Execution::Parallel).unwrap();
    let seq = run_batch(&cfgs, Execution::Sequential).unwrap();
    for (x, y) in par.iter().zip(&seq) {
        assert_eq!(x.samples, y.samples);
        assert_eq!(x.metrics.total, y.metrics.total);
    }
    assert_ne!(par[0].samples, par[1].samples);
}

#[test]
fn unknown_keys_are_config_errors() {
    let err = ScenarioConfig::from_toml("network = \"x.inp\"\nbogus = 1\n").unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
}

#[test]
fn incommensurate_step_is_rejected() {
    let mut cfg = short_config();
    cfg.time.dt_s = Some(7.0);
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let err = prepare(&cfg, net, hyd, Execution::Sequential).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
}
