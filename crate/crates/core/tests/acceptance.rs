//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use wqc_core::dynamics::{
    assemble_system, compute_time_step, fit_step, max_stable_step, AssemblyOptions,
    Discretization,
};
use wqc_core::mpc::{
    bound_constraints, count_variables, horizon_problem, AugmentedSystem, BoundSet,
    ControllerSettings, CostWeights, DualActiveSet, HorizonProblem, OutputMap,
    PredictionOperator,
};
use wqc_core::network::synthetic::{generate, SyntheticSpec};
use wqc_core::network::{parse_network, BoosterLayout};
use wqc_core::par::Execution;
use wqc_core::scenario::{export_report, load_inputs, prepare, ControllerKind, ScenarioConfig};

const LW_TOL: f64 = 1e-12;
const REACTION_REL_TOL: f64 = 0.02;
const FIXED_POINT_REL_TOL: f64 = 1e-12;
const PREDICTION_REL_TOL: f64 = 1e-10;
const STATIONARITY_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-8;
const QP_AGREEMENT_TOL: f64 = 1e-6;
const TRACKING_BAND: f64 = 0.05;
const Y_MAX: f64 = 4.0;
const EVENT_SETTLE_S: f64 = 1800.0;
const SWITCH_SETTLE_S: f64 = 600.0;
const REALTIME_LIMIT_S: f64 = 1.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn variable_counts() -> Outcome {
    let start = Instant::now();
    let three = parse_network(&common::read_data("three-node.inp")).unwrap();
    let net1 = parse_network(&common::read_data("net1.inp")).unwrap();
    let net3 = generate(&SyntheticSpec::net3_scale(1)).unwrap().network;
    let expected = [
        ("three-node", &three, 32_100, 900, 97),
        ("Net1", &net1, 366_900, 3_300, 99),
        ("Net3", &net3, 3_568_800, 29_100, 99),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, net, lp, qp, pct) in expected {
        let c = count_variables(net, &vec![100; net.pipes.len()], 300);
        pass &= c.lp == lp && c.qp == qp && c.reduction_percent() == pct;
        parts.push(format!("{name} {}/{} ({}%)", c.lp, c.qp, c.reduction_percent()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 1.0;
    outcome(pass, format!("{} in {secs:.3} s", parts.join(", ")))
}

fn lw_pulse() -> Outcome {
    let s_l = 100;
    let (net, hyd) = common::line_network(0.0, 100.0, 0.5, 0.0, 1.0);
    let disc = Discretization::uniform(&net, s_l, 1.0).unwrap();
    let none: [&str; 0] = [];
    let boosters = BoosterLayout::build(&net, &none).unwrap();
    let sys =
        assemble_system(&net, &boosters, hyd.period(0), 0, &disc, AssemblyOptions::default())
            .unwrap();
    let outlet = sys.map.segment(0, s_l - 1);
    let mut x = DVector::zeros(sys.n_x());
    x[net.node_position("J1").unwrap()] = 1.0;
    let u = DVector::zeros(sys.n_u());
    let mut worst: f64 = 0.0;
    for step in 1..=2 * s_l {
        x = sys.step(&x, &u).unwrap();
        let want = if step == s_l { 1.0 } else { 0.0 };
        worst = worst.max((x[outlet] - want).abs());
    }
    outcome(
        worst < LW_TOL && (sys.cfl[0] - 1.0).abs() < 1e-15,
        format!("CFL {}, outlet error {worst:.1e} over {} steps", sys.cfl[0], 2 * s_l),
    )
}

fn advection_reaction() -> Outcome {
    let (length, velocity, k) = (1000.0, 0.5, -1.0);
    let (net, hyd) = common::line_network(1.0, length, 0.5, k, velocity);
    let disc = Discretization::uniform(&net, 100, 16.0).unwrap();
    let none: [&str; 0] = [];
    let boosters = BoosterLayout::build(&net, &none).unwrap();
    let sys =
        assemble_system(&net, &boosters, hyd.period(0), 0, &disc, AssemblyOptions::default())
            .unwrap();
    let mut x = DVector::zeros(sys.n_x());
    x[net.node_position("R0").unwrap()] = 1.0;
    let u = DVector::zeros(sys.n_u());
    for _ in 0..1000 {
        x = sys.step(&x, &u).unwrap();
    }
    let outlet = x[sys.map.segment(0, 99)];
    let oracle = (k * length / velocity / 3600.0).exp();
    let rel = (outlet - oracle).abs() / oracle;
    outcome(
        rel <= REACTION_REL_TOL,
        format!(
            "CFL {:.2}: outlet {outlet:.5} vs exp(kL/v) {oracle:.5}, rel error {rel:.2e}",
            sys.cfl[0]
        ),
    )
}

fn uniform_fixed_point() -> Outcome {
    let c = 1.7;
    let mut worst: f64 = 0.0;
    let mut systems = 0;
    for seed in 0..50 {
        let s = generate(&SyntheticSpec::random_small(seed, 20)).unwrap();
        let net = &s.network;
        let boosters = BoosterLayout::build(net, &s.boosters).unwrap();
        let segments = vec![3; net.pipes.len()];
        let mut bound = f64::INFINITY;
        for p in s.hydraulics.periods() {
            if let Ok(b) = max_stable_step(net, &segments, &p.flows) {
                bound = bound.min(b);
            }
        }
        let dt = fit_step(bound.min(3600.0), 3600.0);
        let disc = Discretization::new(net, segments, dt).unwrap();
        for (i, p) in s.hydraulics.periods().iter().enumerate() {
            let sys =
                assemble_system(net, &boosters, p, i, &disc, AssemblyOptions::default()).unwrap();
            let x = DVector::from_element(sys.n_x(), c);
            let u = DVector::from_element(sys.n_u(), c);
            let next = sys.step(&x, &u).unwrap();
            worst = worst.max((next - &x).amax() / c);
            systems += 1;
        }
    }
    outcome(
        worst <= FIXED_POINT_REL_TOL,
        format!("50 networks, {systems} period systems, worst relative drift {worst:.1e}"),
    )
}

fn prediction_equivalence() -> Outcome {
    let mut rng = common::rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n_x = rng.random_range(1..=10);
        let n_u = rng.random_range(1..=3);
        let n_y = rng.random_range(1..=3);
        let horizon = rng.random_range(1..=20);
        let (a, b, c) = common::random_system(&mut rng, n_x, n_u, n_y);
        let aug = AugmentedSystem::from_dense(&a, &b, &c).unwrap();
        let pred = PredictionOperator::build(&aug, horizon, Execution::Sequential).unwrap();
        let dx = common::random_vector(&mut rng, n_x);
        let y = common::random_vector(&mut rng, n_y);
        let du = common::random_vector(&mut rng, n_u * horizon);
        let got = pred.predict(dx.as_slice(), y.as_slice(), &du).unwrap();

        let (phi, gamma, ca) = (aug.phi_a(), aug.gamma_a(), aug.c_a());
        let mut xa = DVector::zeros(n_x + n_y);
        xa.rows_mut(0, n_x).copy_from(&dx);
        xa.rows_mut(n_x, n_y).copy_from(&y);
        let mut want = DVector::zeros(n_y * horizon);
        for k in 0..horizon {
            xa = &phi * &xa + &gamma * du.rows(k * n_u, n_u);
            want.rows_mut(k * n_y, n_y).copy_from(&(&ca * &xa));
        }
        worst = worst.max((&got - &want).norm() / want.norm().max(1.0));
    }
    outcome(
        worst <= PREDICTION_REL_TOL,
        format!("100 random instances, worst relative error {worst:.1e}"),
    )
}

fn analytical_optimality() -> Outcome {
    let mut rng = common::rng(5);
    let (mut stat, mut oracle_err, mut qp_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let n_x = rng.random_range(1..=6);
        let n_u = rng.random_range(1..=2);
        let n_y = rng.random_range(1..=2);
        let horizon = rng.random_range(1..=6);
        let (a, b, c) = common::random_system(&mut rng, n_x, n_u, n_y);
        let aug = AugmentedSystem::from_dense(&a, &b, &c).unwrap();
        let pred = PredictionOperator::build(&aug, horizon, Execution::Sequential).unwrap();
        let weights = CostWeights {
            q: DVector::from_fn(n_y * horizon, |_, _| rng.random_range(0.5..3.0)),
            r: DVector::from_fn(n_u * horizon, |_, _| rng.random_range(0.5..3.0)),
            b: common::random_vector(&mut rng, n_u * horizon) * 0.1,
            y_ref: common::random_vector(&mut rng, n_y * horizon),
        };
        let problem = HorizonProblem::new(pred, weights).unwrap();
        let dx = common::random_vector(&mut rng, n_x);
        let y = common::random_vector(&mut rng, n_y);
        let du = problem.analytical_control(dx.as_slice(), y.as_slice()).unwrap();

        let z = &problem.pred.z;
        let w = problem.pred.w_dense();
        let mut xa = DVector::zeros(n_x + n_y);
        xa.rows_mut(0, n_x).copy_from(&dx);
        xa.rows_mut(n_x, n_y).copy_from(&y);
        let q = DMatrix::from_diagonal(&problem.weights.q);
        let r = DMatrix::from_diagonal(&problem.weights.r);
        let h = z.transpose() * &q * z + r;
        let f = &problem.weights.b + z.transpose() * &q * (&w * &xa - &problem.weights.y_ref);
        stat = stat.max((&h * &du + &f).amax());
        let oracle = h.lu().solve(&(-&f)).unwrap();
        oracle_err = oracle_err.max((&du - &oracle).amax());

        let wide = BoundSet {
            y_min: -1e6,
            y_max: 1e6,
            u_min: -1e6,
            u_max: 1e6,
        };
        let u_prev = DVector::zeros(n_u);
        let ineqs = bound_constraints(z, &(&w * &xa), &u_prev, &wide).unwrap();
        let constrained = problem
            .solve_constrained(dx.as_slice(), y.as_slice(), &ineqs, &DualActiveSet::default())
            .unwrap();
        qp_err = qp_err.max((&constrained - &du).amax());
    }
    outcome(
        stat <= STATIONARITY_TOL && oracle_err <= ORACLE_TOL && qp_err <= QP_AGREEMENT_TOL,
        format!(
            "50 instances: stationarity {stat:.1e}, oracle gap {oracle_err:.1e}, \
             QP vs closed form {qp_err:.1e}"
        ),
    )
}

fn three_node_config() -> ScenarioConfig {
    ScenarioConfig::load(&common::data("three-node.toml")).unwrap()
}

fn closed_loop_tracking() -> Outcome {
    let start = Instant::now();
    let cfg = three_node_config();
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let scenario = prepare(&cfg, net, hyd, Execution::Parallel).unwrap();
    let report = scenario.run(ControllerKind::Mpc).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let y_ref = cfg.controller.y_ref;
    let event = cfg.uncertainty.events[0].time_s;
    let j2 = report.series("J2").unwrap();
    let period = cfg.time.demand_period_s;
    let settling = |t: f64| {
        (event..event + EVENT_SETTLE_S).contains(&t) || t % period < SWITCH_SETTLE_S
    };
    let deviation = |(_, v): &(f64, f64)| (v - y_ref).abs() / y_ref;
    let after_start: Vec<_> = j2.iter().filter(|(t, _)| *t >= 3600.0).copied().collect();
    let steady = after_start
        .iter()
        .filter(|(t, _)| !settling(*t))
        .map(deviation)
        .fold(0.0, f64::max);
    let unfiltered = after_start
        .iter()
        .filter(|(t, _)| !(event..event + EVENT_SETTLE_S).contains(t))
        .map(deviation)
        .fold(0.0, f64::max);
    let peak = j2
        .iter()
        .filter(|(t, _)| *t >= cfg.time.horizon_s)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let recovery = report
        .recovery
        .iter()
        .find(|r| r.entity == "J2")
        .and_then(|r| r.recovery_s);
    let pass = steady <= TRACKING_BAND && peak <= Y_MAX && recovery.is_some() && secs < 60.0;
    outcome(
        pass,
        format!(
            "J2 steady-state max deviation {:.2}% ({:.2}% including switch transients), peak after first horizon {peak:.3} mg/L, \
             recovery {} after the 1 mg/L event, {secs:.1} s for 24 h",
            100.0 * steady,
            100.0 * unfiltered,
            recovery.map_or("never".into(), |r| format!("{:.0} min", r / 60.0))
        ),
    )
}

fn mpc_beats_rbc() -> Outcome {
    let start = Instant::now();
    let cfg = three_node_config();
    let (net, hyd) = load_inputs(&cfg).unwrap();
    let scenario = prepare(&cfg, net, hyd, Execution::Parallel).unwrap();
    let mpc = scenario.run(ControllerKind::Mpc).unwrap().metrics;
    let rbc = scenario.run(ControllerKind::Rbc).unwrap().metrics;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mpc.total < rbc.total && secs < 120.0,
        format!(
            "MPC (dev {:.3e}, smooth {:.3e}, cost {:.3e}, total {:.3e}) vs \
             RBC (dev {:.3e}, smooth {:.3e}, cost {:.3e}, total {:.3e})",
            mpc.reference_deviation,
            mpc.smoothness,
            mpc.chlorine_cost_usd,
            mpc.total,
            rbc.reference_deviation,
            rbc.smoothness,
            rbc.chlorine_cost_usd,
            rbc.total
        ),
    )
}

fn realtime_net3() -> Outcome {
    let s = generate(&SyntheticSpec::net3_scale(1)).unwrap();
    let net = &s.network;
    let boosters = BoosterLayout::build(net, &s.boosters).unwrap();
    let segments = vec![100; net.pipes.len()];
    let period = s.hydraulics.period(0);
    let dt = compute_time_step(net, &segments, &period.flows, period.duration_s).unwrap();
    let disc = Discretization::new(net, segments, dt).unwrap();
    let sys = assemble_system(net, &boosters, period, 0, &disc, AssemblyOptions::default())
        .unwrap();
    let nodes = boosters.nodes();
    let inputs = [nodes[0], nodes[nodes.len() / 2], nodes[nodes.len() - 1]];
    let names: Vec<&str> = inputs.iter().map(|&n| net.node_id(n)).collect();
    let sensors = OutputMap::from_names(net, &sys, &names).unwrap();
    let flows: Vec<f64> = inputs.iter().map(|&n| period.booster_flows[n]).collect();
    let settings = ControllerSettings {
        horizon: 300,
        q: 3.0,
        r: 5.0,
        lambda: 0.001,
        y_ref: vec![0.6; 3],
        bounds: BoundSet::default(),
        constrained: false,
    };
    let build = Instant::now();
    let problem =
        horizon_problem(&sys, &sensors, &inputs, &flows, &settings, Execution::Parallel).unwrap();
    let build_s = build.elapsed().as_secs_f64();
    let dx = vec![1e-3; sys.n_x()];
    let y = [0.3, 0.5, 0.7];
    let step = Instant::now();
    let du = problem.analytical_control(&dx, &y).unwrap();
    let step_s = step.elapsed().as_secs_f64();
    outcome(
        step_s < REALTIME_LIMIT_S && du.iter().all(|v| v.is_finite()),
        format!(
            "n_S = {}, n_x = {}, N_p = 300, 3 boosters: control step {:.1} ms \
             (one-off build {build_s:.2} s)",
            disc.total_segments(),
            sys.n_x(),
            step_s * 1e3
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let cfg = three_node_config();
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ControllerKind::Mpc, ControllerKind::Rbc] {
            let (net, hyd) = load_inputs(&cfg).unwrap();
            let report = prepare(&cfg, net, hyd, Execution::Parallel)
                .unwrap()
                .run(kind)
                .unwrap();
            export_report(&report, &dir.path().join(format!("{kind:?}"))).unwrap();
        }
        trees.push(read_tree(dir.path()));
    }
    let files = trees[0].len();
    outcome(
        files > 0 && trees[0] == trees[1],
        format!("{files} exported files compared byte for byte across two seeded runs"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("C1 variable counts", variable_counts),
        ("C2 L-W pulse at CFL 1", lw_pulse),
        ("C3 advection-reaction", advection_reaction),
        ("C4 uniform fixed point", uniform_fixed_point),
        ("C5 prediction equivalence", prediction_equivalence),
        ("C6 analytical-law optimality", analytical_optimality),
        ("C7 closed-loop tracking", closed_loop_tracking),
        ("C8 MPC beats RBC", mpc_beats_rbc),
        ("C9 real-time at Net3 scale", realtime_net3),
        ("C10 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
