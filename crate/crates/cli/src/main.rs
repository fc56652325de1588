use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wqc_core::dynamics::{
    assemble_schedule, dependence_order, export::write_systems, fit_step, max_stable_step,
    simulate, AssemblyOptions, Component, Discretization, ReactionFold,
};
use wqc_core::error::{Error, ErrorKind, Result};
use wqc_core::mpc::count_variables;
use wqc_core::network::{parse_network, BoosterLayout, HydraulicProfile, IncidenceSet};
use wqc_core::par::{self, Execution};
use wqc_core::scenario::{
    export_report, load_inputs, prepare, ControllerKind, PreparedScenario, ScenarioConfig,
    ScenarioReport,
};

/// Water-quality modeling and chlorine booster control.
#[derive(Debug, Parser)]
#[command(name = "wqc", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Network file (.inp).
    #[arg(long, global = true)]
    net: Option<PathBuf>,
    /// Hydraulic schedule (.csv).
    #[arg(long, global = true)]
    hydraulics: Option<PathBuf>,
    /// Scenario file (.toml or .json).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Segments per pipe.
    #[arg(long, global = true)]
    segments: Option<usize>,
    /// Prediction horizon in quality steps.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Reference concentration in mg/L.
    #[arg(long, global = true)]
    yref: Option<f64>,
    /// Chlorine price in $/mg.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    controller: Option<Controller>,
    /// Fold reaction rates into A without the step-length factor.
    #[arg(long, global = true)]
    paper_literal_reaction: bool,
    /// Hydraulic period in seconds when no scenario is given.
    #[arg(long, global = true, default_value_t = 3600.0)]
    hydraulic_step: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print component counts and the dependence order.
    Inspect {
        /// Network file; same as --net.
        network: Option<PathBuf>,
    },
    /// Write A, B and the state index map for every hydraulic period.
    BuildMatrices,
    /// Open-loop run with constant booster inputs.
    Simulate {
        /// Booster concentration held over the run (mg/L).
        #[arg(long, default_value_t = 0.0)]
        input: f64,
    },
    /// Closed-loop run.
    Control,
    /// Run MPC and the rule-based controller on the same seed.
    CompareRbc,
    /// LP and QP variable counts.
    ScaleReport {
        /// Additional network files.
        networks: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Controller {
    Mpc,
    Rbc,
}

impl From<Controller> for ControllerKind {
    fn from(c: Controller) -> Self {
        match c {
            Controller::Mpc => ControllerKind::Mpc,
            Controller::Rbc => ControllerKind::Rbc,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Model => 2,
                ErrorKind::Solver => 3,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Inspect { network } => inspect(cli, network.as_deref()),
        Command::BuildMatrices => build_matrices(cli),
        Command::Simulate { input } => open_loop(cli, *input),
        Command::Control => control(cli),
        Command::CompareRbc => compare(cli),
        Command::ScaleReport { networks } => scale_report(cli, networks),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{flag} is required")))
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    required(&cli.out, "--out")
}

fn reaction_fold(literal: bool) -> AssemblyOptions {
    AssemblyOptions {
        reaction: if literal {
            ReactionFold::PaperLiteral
        } else {
            ReactionFold::Scaled
        },
    }
}

/// Scenario file with command-line overrides applied.
fn scenario_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(required(&cli.scenario, "--scenario")?)?;
    if let Some(p) = &cli.net {
        cfg.network = p.clone();
    }
    if let Some(p) = &cli.hydraulics {
        cfg.hydraulics = p.clone();
    }
    if let Some(s) = cli.segments {
        cfg.segments = s;
    }
    if let Some(y) = cli.yref {
        cfg.controller.y_ref = y;
    }
    if let Some(l) = cli.lambda {
        cfg.controller.lambda = l;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.controller {
        cfg.controller.kind = c.into();
    }
    if cli.paper_literal_reaction {
        cfg.paper_literal_reaction = true;
    }
    Ok(cfg)
}

/// Prepare a scenario sequentially, applying a horizon given in steps.
fn prepared(cli: &Cli) -> Result<PreparedScenario> {
    let cfg = scenario_config(cli)?;
    let (net, hyd) = load_inputs(&cfg)?;
    let mut s = prepare(&cfg, net, hyd, Execution::Sequential)?;
    if let Some(n) = cli.horizon {
        if n == 0 {
            return Err(Error::Config("--horizon must be at least 1".into()));
        }
        s.config.time.horizon_s = n as f64 * s.dt_s();
        s.horizon_steps = n;
    }
    Ok(s)
}

fn inspect(cli: &Cli, positional: Option<&Path>) -> Result<()> {
    let path = match positional {
        Some(p) => p,
        None => required(&cli.net, "a network file")?,
    };
    let net = parse_network(&read(path)?)?;
    let c = net.counts().as_array();
    println!(
        "counts {{{}}} (junctions, reservoirs, tanks, pipes, pumps, valves)",
        c.map(|v| v.to_string()).join(",")
    );
    let inc = match &cli.hydraulics {
        Some(h) => {
            let hyd = HydraulicProfile::from_csv(&net, &read(h)?, cli.hydraulic_step)?;
            IncidenceSet::build(&net).orient_by_flow(&hyd.period(0).flows)?
        }
        None => IncidenceSet::build(&net),
    };
    let order: Vec<&str> = dependence_order(&net, &inc)?
        .into_iter()
        .map(|c| match c {
            Component::Node(i) => net.node_id(i),
            Component::Pipe(k) | Component::Connector(k) => net.link_id(k),
        })
        .collect();
    println!("dependence order: {}", order.join(" -> "));
    if let Some(s) = cli.segments {
        let n_s = s * net.pipes.len();
        println!(
            "states {} (nodes {}, segments {n_s}, pumps {}, valves {})",
            net.node_count() + n_s + net.pumps.len() + net.valves.len(),
            net.node_count(),
            net.pumps.len(),
            net.valves.len()
        );
    }
    Ok(())
}

fn build_matrices(cli: &Cli) -> Result<()> {
    let out = out_dir(cli)?;
    let (net, hyd, segments, boosters, opts) = if cli.scenario.is_some() {
        let cfg = scenario_config(cli)?;
        let (net, hyd) = load_inputs(&cfg)?;
        let boosters = BoosterLayout::build(&net, &cfg.controller.boosters)?;
        (net, hyd, cfg.segments, boosters, reaction_fold(cfg.paper_literal_reaction))
    } else {
        let net = parse_network(&read(required(&cli.net, "--net")?)?)?;
        let text = read(required(&cli.hydraulics, "--hydraulics")?)?;
        let hyd = HydraulicProfile::from_csv(&net, &text, cli.hydraulic_step)?;
        let boosters = BoosterLayout::everywhere(&net);
        let opts = reaction_fold(cli.paper_literal_reaction);
        (net, hyd, cli.segments.unwrap_or(100), boosters, opts)
    };
    let segments = vec![segments; net.pipes.len()];
    let mut bound = f64::INFINITY;
    for p in hyd.periods() {
        if let Ok(b) = max_stable_step(&net, &segments, &p.flows) {
            bound = bound.min(b);
        }
    }
    if !bound.is_finite() {
        return Err(Error::Stagnant);
    }
    let period = hyd.period(0).duration_s;
    let disc = Discretization::new(&net, segments, fit_step(bound.min(period), period))?;
    let systems = assemble_schedule(&net, &boosters, &hyd, &disc, opts, Execution::Sequential)?;
    write_systems(out, &systems, &net)?;
    println!(
        "wrote {} periods, n_x = {}, dt = {} s to {}",
        systems.len(),
        systems[0].n_x(),
        disc.dt_s(),
        out.display()
    );
    Ok(())
}

fn open_loop(cli: &Cli, input: f64) -> Result<()> {
    let out = out_dir(cli)?;
    let s = prepared(cli)?;
    let n_u = s.model[0].n_u();
    let mut u = nalgebra::DVector::zeros(n_u);
    for &b in s.boosters.nodes() {
        u[b] = input;
    }
    let traj = simulate(&s.model, &s.nominal, &s.x0, |_| u.clone(), 1)?.per_minute();
    let names = &s.config.recorded();
    let mut csv = String::from("time_s,entity,value\n");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let y = s.recorded.apply(x.as_slice());
        for (name, v) in names.iter().zip(y.iter()) {
            csv.push_str(&format!("{t},{name},{v}\n"));
        }
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("trajectories.csv"), csv)?;
    println!(
        "simulated {} s at dt = {} s; {} samples written to {}",
        s.config.time.duration_s,
        s.dt_s(),
        traj.times.len(),
        out.display()
    );
    Ok(())
}

fn summary(r: &ScenarioReport) -> String {
    let m = &r.metrics;
    format!(
        "{:?}: reference deviation {:.4e}, smoothness {:.4e}, cost {:.4e} $, total {:.4e}",
        r.controller, m.reference_deviation, m.smoothness, m.chlorine_cost_usd, m.total
    )
}

fn control(cli: &Cli) -> Result<()> {
    let s = prepared(cli)?;
    let report = s.run(s.config.controller.kind)?;
    if let Some(out) = &cli.out {
        export_report(&report, out)?;
    }
    println!("{}", summary(&report));
    for r in &report.recovery {
        match r.recovery_s {
            Some(t) => println!("recovery {} after t = {} s: {t} s", r.entity, r.event_time_s),
            None => println!("recovery {} after t = {} s: not reached", r.entity, r.event_time_s),
        }
    }
    if report.fallbacks > 0 {
        println!("fallback solves: {}", report.fallbacks);
    }
    Ok(())
}

fn compare(cli: &Cli) -> Result<()> {
    let s = prepared(cli)?;
    let kinds = [ControllerKind::Mpc, ControllerKind::Rbc];
    let reports = par::try_map(Execution::Parallel, &kinds, |&k| s.run(k))?;
    for r in &reports {
        if let Some(out) = &cli.out {
            export_report(r, &out.join(format!("{:?}", r.controller).to_lowercase()))?;
        }
        println!("{}", summary(r));
    }
    Ok(())
}

fn scale_report(cli: &Cli, extra: &[PathBuf]) -> Result<()> {
    let paths: Vec<&PathBuf> = cli.net.iter().chain(extra).collect();
    if paths.is_empty() {
        return Err(Error::Config("scale-report needs at least one network".into()));
    }
    let segments = cli.segments.unwrap_or(100);
    let horizon = cli.horizon.unwrap_or(300);
    for p in &paths {
        let net = parse_network(&read(p)?)?;
        let c = count_variables(&net, &vec![segments; net.pipes.len()], horizon);
        if paths.len() > 1 {
            println!("{}: {c}", p.display());
        } else {
            println!("{c}");
        }
    }
    Ok(())
}
