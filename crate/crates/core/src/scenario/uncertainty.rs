use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{HydraulicPeriod, HydraulicProfile, NodeKind, WaterNetwork};

/// Concentrations forced onto plant states at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceEvent {
    pub time_s: f64,
    pub entities: Vec<String>,
    /// Forced concentration (mg/L).
    pub value: f64,
}

/// Plant-side uncertainty. Bands are relative half-widths: a band of 0.1
/// draws factors uniformly from [0.9, 1.1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    #[serde(default)]
    pub demand_band: f64,
    /// Applied to bulk and wall constants independently.
    #[serde(default)]
    pub reaction_band: f64,
    /// Pipes whose reaction constants are perturbed; every pipe when empty.
    #[serde(default)]
    pub reaction_pipes: Vec<String>,
    #[serde(default)]
    pub events: Vec<DisturbanceEvent>,
}

impl UncertaintySpec {
    pub fn validate(&self, duration_s: f64) -> Result<()> {
        for (name, b) in [
            ("demand_band", self.demand_band),
            ("reaction_band", self.reaction_band),
        ] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        for e in &self.events {
            if !(0.0..=duration_s).contains(&e.time_s) {
                return Err(Error::Config(format!(
                    "event at {} s lies outside [0, {duration_s}]",
                    e.time_s
                )));
            }
            if e.entities.is_empty() {
                return Err(Error::Config(format!("event at {} s lists no entities", e.time_s)));
            }
        }
        Ok(())
    }
}

/// Quantities seen by the plant: perturbed network and hydraulics plus the
/// factors drawn.
#[derive(Debug, Clone)]
pub struct PlantInputs {
    pub network: WaterNetwork,
    pub hydraulics: HydraulicProfile,
    /// Per pipe.
    pub bulk_factors: Vec<f64>,
    pub wall_factors: Vec<f64>,
    /// Per demand period, per junction.
    pub demand_factors: Vec<Vec<f64>>,
}

fn draw(rng: &mut ChaCha8Rng, band: f64) -> f64 {
    1.0 + band * (2.0 * rng.random::<f64>() - 1.0)
}

/// Draw the plant perturbation for one scenario.
///
/// Reaction factors are drawn once; demand factors once per demand period,
/// shared by the hydraulic periods inside it. A junction's demand change is
/// routed back along its largest inflow path to a reservoir or tank so every
/// junction stays balanced.
pub fn apply_uncertainty(
    spec: &UncertaintySpec,
    seed: u64,
    net: &WaterNetwork,
    nominal: &HydraulicProfile,
    hydraulic_step_s: f64,
    demand_period_s: f64,
) -> Result<PlantInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturbed = vec![spec.reaction_pipes.is_empty(); net.pipes.len()];
    for id in &spec.reaction_pipes {
        let k = net
            .link_position(id)
            .filter(|&k| k < net.pipes.len())
            .ok_or_else(|| Error::Config(format!("unknown pipe '{id}' in reaction_pipes")))?;
        perturbed[k] = true;
    }
    let mut bulk = vec![1.0; net.pipes.len()];
    let mut wall = vec![1.0; net.pipes.len()];
    for k in 0..net.pipes.len() {
        let (b, w) = (draw(&mut rng, spec.reaction_band), draw(&mut rng, spec.reaction_band));
        if perturbed[k] {
            bulk[k] = b;
            wall[k] = w;
        }
    }
    let per_demand = (demand_period_s / hydraulic_step_s).round().max(1.0) as usize;
    let n_demand = nominal.len().div_ceil(per_demand);
    let demand_factors: Vec<Vec<f64>> = (0..n_demand)
        .map(|_| {
            (0..net.junctions.len())
                .map(|_| draw(&mut rng, spec.demand_band))
                .collect()
        })
        .collect();
    let periods = nominal
        .periods()
        .iter()
        .enumerate()
        .map(|(i, p)| rebalance(net, p, &demand_factors[i / per_demand]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlantInputs {
        network: net.with_scaled_reaction(&bulk, &wall),
        hydraulics: HydraulicProfile::from_periods(net, periods)?,
        bulk_factors: bulk,
        wall_factors: wall,
        demand_factors,
    })
}

fn rebalance(net: &WaterNetwork, p: &HydraulicPeriod, factors: &[f64]) -> Result<HydraulicPeriod> {
    let mut out = p.clone();
    for (j, &f) in factors.iter().enumerate() {
        let delta = p.demands[j] * (f - 1.0);
        if delta == 0.0 {
            continue;
        }
        out.demands[j] += delta;
        let mut node = j;
        for _ in 0..=net.link_count() {
            if net.node_kind(node) != NodeKind::Junction {
                break;
            }
            // Nominal flows pick the path so the route does not depend on
            // the order in which junctions are processed.
            let feed = (0..net.link_count())
                .filter_map(|k| {
                    let (a, b) = net.link_ends(k);
                    let q = p.flows[k];
                    if b == node && q > 0.0 {
                        Some((k, a, q))
                    } else if a == node && q < 0.0 {
                        Some((k, b, -q))
                    } else {
                        None
                    }
                })
                .max_by(|x, y| x.2.total_cmp(&y.2));
            let Some((k, up, _)) = feed else {
                return Err(Error::Hydraulics(format!(
                    "junction '{}' has no supply path for a demand change",
                    net.node_id(node)
                )));
            };
            out.flows[k] += delta * p.flows[k].signum();
            node = up;
        }
    }
    Ok(out)
}
