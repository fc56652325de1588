use std::time::Instant;

use nalgebra::DVector;

use super::config::{ControllerKind, ScenarioConfig};
use super::metrics::{compute_metrics, MetricWeights};
use super::rbc::rbc_control;
use super::report::{ControlRecord, Recovery, Sample, ScenarioReport};
use super::uncertainty::{apply_uncertainty, PlantInputs};
use crate::dynamics::{
    assemble_schedule, fit_step, max_stable_step, steps_in, AssemblyOptions, Discretization,
    ReactionFold, StateSpaceSystem,
};
use crate::error::{Error, Result};
use crate::mpc::{horizon_problem, ControllerSettings, MpcController, OutputMap, SolveMode};
use crate::network::{parse_network, BoosterLayout, HydraulicProfile, WaterNetwork};
use crate::par::{self, Execution};
use crate::units::m3s_to_lpm;

/// Consecutive control steps inside the band that count as recovered.
const SETTLE_STEPS: usize = 5;
/// Relative band around the reference used for recovery.
const RECOVERY_BAND: f64 = 0.05;

/// A scenario with everything assembled: nominal model for the controller,
/// perturbed plant, output maps and the initial state.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub network: WaterNetwork,
    pub nominal: HydraulicProfile,
    pub plant: PlantInputs,
    pub boosters: BoosterLayout,
    pub disc: Discretization,
    pub model: Vec<StateSpaceSystem>,
    pub plant_systems: Vec<StateSpaceSystem>,
    pub sensors: OutputMap,
    pub monitored: OutputMap,
    pub recorded: OutputMap,
    pub x0: DVector<f64>,
    /// `(step, state indices, value)`.
    events: Vec<(usize, Vec<usize>, f64)>,
    pub horizon_steps: usize,
    pub hold_steps: usize,
    pub steps_per_period: usize,
    pub control_steps: usize,
}

/// Read the network and hydraulics files named by the config.
pub fn load_inputs(cfg: &ScenarioConfig) -> Result<(WaterNetwork, HydraulicProfile)> {
    let read = |p: &std::path::Path| {
        std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))
    };
    let net = parse_network(&read(&cfg.network)?)?;
    let hyd = HydraulicProfile::from_csv(&net, &read(&cfg.hydraulics)?, cfg.time.hydraulic_step_s)?;
    Ok((net, hyd))
}

fn steps(what: &str, duration: f64, dt: f64) -> Result<usize> {
    steps_in(duration, dt).map_err(|_| {
        Error::Config(format!(
            "{what} of {duration} s is not a whole number of {dt} s quality steps; set time.dt_s"
        ))
    })
}

/// Validate and assemble a scenario.
pub fn prepare(
    cfg: &ScenarioConfig,
    net: WaterNetwork,
    profile: HydraulicProfile,
    exec: Execution,
) -> Result<PreparedScenario> {
    cfg.validate()?;
    let t = &cfg.time;
    let n_periods = (t.duration_s / t.hydraulic_step_s).round() as usize;
    if profile.len() < n_periods {
        return Err(Error::Config(format!(
            "hydraulics cover {} periods but the duration needs {n_periods}",
            profile.len()
        )));
    }
    let nominal = HydraulicProfile::from_periods(&net, profile.periods()[..n_periods].to_vec())?;
    let plant = apply_uncertainty(
        &cfg.uncertainty,
        cfg.seed,
        &net,
        &nominal,
        t.hydraulic_step_s,
        t.demand_period_s,
    )?;
    let segments = vec![cfg.segments; net.pipes.len()];
    let dt = match t.dt_s {
        Some(dt) => dt,
        None => {
            let mut bound = f64::INFINITY;
            for p in nominal.periods().iter().chain(plant.hydraulics.periods()) {
                bound = bound.min(max_stable_step(&net, &segments, &p.flows)?);
            }
            fit_step(bound, t.control_interval_s)
        }
    };
    let steps_per_period = steps("hydraulic step", t.hydraulic_step_s, dt)?;
    let horizon_steps = steps("horizon", t.horizon_s, dt)?;
    let hold_steps = steps("control interval", t.control_interval_s, dt)?;
    let control_steps = (t.duration_s / t.control_interval_s).round() as usize;

    let disc = Discretization::new(&net, segments, dt)?;
    let boosters = BoosterLayout::build(&net, &cfg.controller.boosters)?;
    let opts = AssemblyOptions {
        reaction: if cfg.paper_literal_reaction {
            ReactionFold::PaperLiteral
        } else {
            ReactionFold::Scaled
        },
    };
    let model = assemble_schedule(&net, &boosters, &nominal, &disc, opts, exec)?;
    let plant_systems =
        assemble_schedule(&plant.network, &boosters, &plant.hydraulics, &disc, opts, exec)?;

    let sys0 = &model[0];
    let sensors = OutputMap::from_names(&net, sys0, &cfg.controller.sensors)?;
    let monitored = OutputMap::from_names(&net, sys0, &cfg.monitored())?;
    let recorded = OutputMap::from_names(&net, sys0, &cfg.recorded())?;

    let mut x0 = DVector::from_element(sys0.n_x(), cfg.initial);
    for i in 0..net.node_count() {
        if let Some(c) = net.reservoir_source(i) {
            x0[i] = c;
        }
    }
    let mut events = Vec::new();
    for e in &cfg.uncertainty.events {
        let mut idx = Vec::new();
        for name in &e.entities {
            idx.extend(sys0.map.indices(sys0.map.resolve(&net, name)?));
        }
        events.push(((e.time_s / dt).round() as usize, idx, e.value));
    }

    Ok(PreparedScenario {
        config: cfg.clone(),
        network: net,
        nominal,
        plant,
        boosters,
        disc,
        model,
        plant_systems,
        sensors,
        monitored,
        recorded,
        x0,
        events,
        horizon_steps,
        hold_steps,
        steps_per_period,
        control_steps,
    })
}

impl PreparedScenario {
    pub fn dt_s(&self) -> f64 {
        self.disc.dt_s()
    }

    fn apply_events(&self, step: usize, x: &mut DVector<f64>) {
        for (s, idx, v) in &self.events {
            if *s == step {
                for &i in idx {
                    x[i] = *v;
                }
            }
        }
    }

    fn booster_flows(&self, period: usize) -> Vec<f64> {
        let p = self.nominal.period(period);
        self.boosters.nodes().iter().map(|&n| p.booster_flows[n]).collect()
    }

    /// Run the closed loop with the given controller.
    pub fn run(&self, kind: ControllerKind) -> Result<ScenarioReport> {
        let cfg = &self.config;
        let c = &cfg.controller;
        let dt = self.dt_s();
        let inputs = self.boosters.nodes().to_vec();
        let bounds = c.bounds();
        let settings = ControllerSettings {
            horizon: self.horizon_steps,
            q: c.q,
            r: c.r,
            lambda: c.lambda,
            y_ref: vec![c.y_ref; self.sensors.len()],
            bounds: bounds.clone(),
            constrained: c.constrained,
        };
        let mut mpc = MpcController::new(settings, inputs.len())?;
        let rules = match kind {
            ControllerKind::Rbc => Some(cfg.rule_table()?),
            ControllerKind::Mpc => None,
        };

        let n_x = self.x0.len();
        let mut xm = self.x0.clone();
        let mut xm_prev = self.x0.clone();
        let mut xp = self.x0.clone();
        let mut scratch = DVector::zeros(n_x);
        let mut u_full = DVector::zeros(self.network.node_count());
        let mut samples = Vec::with_capacity(self.control_steps + 1);
        let mut controls = Vec::with_capacity(self.control_steps);
        let mut fallbacks = 0;
        let mut wall = 0.0;
        let mut step = 0usize;

        for _ in 0..self.control_steps {
            let t = step as f64 * dt;
            self.apply_events(step, &mut xp);
            samples.push(Sample {
                time_s: t,
                values: self.recorded.apply(xp.as_slice()).as_slice().to_vec(),
            });
            let period = (step / self.steps_per_period).min(self.model.len() - 1);
            let qb = self.booster_flows(period);
            let lpm: Vec<f64> = qb.iter().map(|&q| m3s_to_lpm(q)).collect();
            let monitored = self.monitored.apply(xp.as_slice());

            let clock = Instant::now();
            let u = match &rules {
                None => {
                    let y = self.sensors.apply(xp.as_slice());
                    let dx = &xm - &xm_prev;
                    let (u, mode) = mpc
                        .advance(
                            period,
                            |s| {
                                horizon_problem(
                                    &self.model[period],
                                    &self.sensors,
                                    &inputs,
                                    &qb,
                                    s,
                                    Execution::Sequential,
                                )
                            },
                            dx.as_slice(),
                            y.as_slice(),
                            self.hold_steps,
                        )
                        .map_err(|e| e.at(t))?;
                    if matches!(mode, SolveMode::Relaxed | SolveMode::Fallback) {
                        fallbacks += 1;
                    }
                    u
                }
                Some(table) => {
                    let dose = rbc_control(table, monitored.as_slice(), c.y_ref);
                    DVector::from_iterator(
                        inputs.len(),
                        lpm.iter().map(|&q| {
                            let u = if q > 0.0 { dose / q } else { 0.0 };
                            u.clamp(bounds.u_min, bounds.u_max)
                        }),
                    )
                }
            };
            wall += clock.elapsed().as_secs_f64() * 1e3;

            for (k, &n) in inputs.iter().enumerate() {
                u_full[n] = u[k];
            }
            controls.push(ControlRecord {
                time_s: t,
                monitored: monitored.as_slice().to_vec(),
                mass_rate: u.iter().zip(&lpm).map(|(u, q)| u * q).collect(),
                u: u.as_slice().to_vec(),
            });

            for h in 0..self.hold_steps {
                if h > 0 {
                    self.apply_events(step, &mut xp);
                }
                let period = (step / self.steps_per_period).min(self.model.len() - 1);
                let at = step as f64 * dt;
                self.model[period]
                    .step_into(xm.as_slice(), u_full.as_slice(), xm_prev.as_mut_slice())
                    .map_err(|e| e.at(at))?;
                std::mem::swap(&mut xm, &mut xm_prev);
                self.plant_systems[period]
                    .step_into(xp.as_slice(), u_full.as_slice(), scratch.as_mut_slice())
                    .map_err(|e| e.at(at))?;
                std::mem::swap(&mut xp, &mut scratch);
                step += 1;
            }
        }
        self.apply_events(step, &mut xp);
        samples.push(Sample {
            time_s: step as f64 * dt,
            values: self.recorded.apply(xp.as_slice()).as_slice().to_vec(),
        });

        let weights = MetricWeights {
            q: c.q,
            r: c.r,
            lambda: c.lambda,
            y_ref: c.y_ref,
            interval_min: cfg.time.control_interval_s / 60.0,
        };
        let mut metrics = compute_metrics(&controls, &weights);
        if cfg.timing && !controls.is_empty() {
            metrics.wall_ms_per_control_step = wall / controls.len() as f64;
        }
        let monitored = cfg.monitored();
        let recovery = recovery_times(cfg, &monitored, &controls);
        Ok(ScenarioReport {
            controller: kind,
            dt_s: dt,
            horizon_steps: self.horizon_steps,
            recorded: cfg.recorded(),
            samples,
            monitored,
            boosters: c.boosters.clone(),
            controls,
            metrics,
            recovery,
            fallbacks,
        })
    }
}

fn recovery_times(
    cfg: &ScenarioConfig,
    monitored: &[String],
    controls: &[ControlRecord],
) -> Vec<Recovery> {
    let y_ref = cfg.controller.y_ref;
    let band = RECOVERY_BAND * y_ref;
    let mut out = Vec::new();
    for e in &cfg.uncertainty.events {
        let first = controls.partition_point(|c| c.time_s < e.time_s - 1e-9);
        for (m, name) in monitored.iter().enumerate() {
            let inside = |c: &ControlRecord| (c.monitored[m] - y_ref).abs() <= band;
            let settled = (first..controls.len()).find(|&i| {
                let end = (i + SETTLE_STEPS).min(controls.len());
                controls[i..end].iter().all(inside)
            });
            out.push(Recovery {
                event_time_s: e.time_s,
                entity: name.clone(),
                recovery_s: settled.map(|i| controls[i].time_s - e.time_s),
            });
        }
    }
    out
}

/// Load, assemble and run a scenario with its configured controller.
pub fn run_scenario(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioReport> {
    let (net, hyd) = load_inputs(cfg)?;
    prepare(cfg, net, hyd, exec)?.run(cfg.controller.kind)
}

/// Run independent scenarios, in parallel when `exec` allows.
pub fn run_batch(cfgs: &[ScenarioConfig], exec: Execution) -> Result<Vec<ScenarioReport>> {
    par::try_map(exec, cfgs, |c| run_scenario(c, Execution::Sequential))
}
