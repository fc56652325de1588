//! Random balance-consistent networks with matching hydraulic schedules.
//!
//! Junctions form a spanning forest rooted at the reservoirs; tanks hang off
//! junctions as leaves that either fill or drain; remaining pipes close loops
//! and carry a small circulation along the tree path between their ends.
//! Every junction balances exactly (up to rounding) in every period.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Connector, HydraulicPeriod, HydraulicProfile, Junction, Pipe, Reservoir, Tank, WaterNetwork,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub junctions: usize,
    pub reservoirs: usize,
    pub tanks: usize,
    pub pipes: usize,
    pub pumps: usize,
    pub valves: usize,
    pub boosters: usize,
    pub periods: usize,
    pub period_s: f64,
    /// When false every rate constant is zero.
    pub reactive: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Counts of the Net3 benchmark: 92 junctions, 2 reservoirs, 3 tanks,
    /// 117 pipes, 2 pumps.
    pub fn net3_scale(seed: u64) -> Self {
        SyntheticSpec {
            junctions: 92,
            reservoirs: 2,
            tanks: 3,
            pipes: 117,
            pumps: 2,
            valves: 0,
            boosters: 92,
            periods: 1,
            period_s: 3600.0,
            reactive: true,
            seed,
        }
    }

    /// A random small network with at most `max_nodes` nodes.
    pub fn random_small(seed: u64, max_nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_nodes = max_nodes.max(3);
        let reservoirs = rng.random_range(1..=2.min(max_nodes - 2));
        let tanks = rng.random_range(0..=2.min(max_nodes - reservoirs - 1));
        let junctions = rng.random_range(1..=max_nodes - reservoirs - tanks).max(reservoirs);
        let tree_edges = junctions - reservoirs;
        let pumps = reservoirs + rng.random_range(0..=tree_edges.min(1));
        let valves = rng.random_range(0..=(tree_edges - (pumps - reservoirs)).min(2));
        let tree_pipes = tree_edges - (pumps - reservoirs) - valves;
        let loops = if junctions >= 3 {
            rng.random_range(0..=3)
        } else {
            0
        };
        SyntheticSpec {
            junctions,
            reservoirs,
            tanks,
            pipes: tree_pipes + tanks + loops,
            pumps,
            valves,
            boosters: rng.random_range(0..=junctions),
            periods: rng.random_range(1..=3),
            period_s: 3600.0,
            reactive: false,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub network: WaterNetwork,
    pub hydraulics: HydraulicProfile,
    pub boosters: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum EdgeKind {
    Pipe,
    Pump,
    Valve,
}

struct Edge {
    kind: EdgeKind,
    from: usize,
    to: usize,
}

/// Generate a network and schedule from `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticNetwork> {
    let nj = spec.junctions;
    let nr = spec.reservoirs;
    let nt = spec.tanks;
    if nr == 0 || nj < nr {
        return Err(Error::Config(
            "synthetic network needs at least one reservoir and one junction per reservoir".into(),
        ));
    }
    if spec.pumps < nr {
        return Err(Error::Config("one pump per reservoir is required".into()));
    }
    let tree_edges = nj - nr;
    let extra_pumps = spec.pumps - nr;
    if extra_pumps + spec.valves > tree_edges {
        return Err(Error::Config(
            "too many pumps and valves for the junction count".into(),
        ));
    }
    let tree_pipes = tree_edges - extra_pumps - spec.valves;
    if spec.pipes < tree_pipes + nt {
        return Err(Error::Config(format!(
            "at least {} pipes are needed to connect the network",
            tree_pipes + nt
        )));
    }
    let loops = spec.pipes - tree_pipes - nt;
    if loops > 0 && nj < 3 {
        return Err(Error::Config("loops need at least three junctions".into()));
    }
    if spec.boosters > nj {
        return Err(Error::Config("more boosters than junctions".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Node positions: junctions 0..nj, reservoirs nj.., tanks nj+nr..
    let mut parent = vec![usize::MAX; nj];
    let mut tree: Vec<Edge> = Vec::new();
    for r in 0..nr {
        tree.push(Edge {
            kind: EdgeKind::Pump,
            from: nj + r,
            to: r,
        });
    }
    let mut tree_kinds: Vec<EdgeKind> = std::iter::repeat_n(EdgeKind::Pump, extra_pumps)
        .chain(std::iter::repeat_n(EdgeKind::Valve, spec.valves))
        .chain(std::iter::repeat_n(EdgeKind::Pipe, tree_pipes))
        .collect();
    tree_kinds.shuffle(&mut rng);
    for (j, kind) in (nr..nj).zip(tree_kinds) {
        let p = rng.random_range(0..j);
        parent[j] = p;
        tree.push(Edge {
            kind,
            from: p,
            to: j,
        });
    }

    // Tanks: leaf pipes that fill (junction -> tank) or drain (tank -> junction).
    let tank_site: Vec<usize> = (0..nt).map(|_| rng.random_range(0..nj)).collect();
    let tank_fills: Vec<bool> = (0..nt).map(|_| rng.random_bool(0.5)).collect();

    let base_demand: Vec<f64> = (0..nj).map(|_| rng.random_range(1e-3..5e-3)).collect();
    let tank_rate: Vec<f64> = (0..nt)
        .map(|t| 0.25 * base_demand[tank_site[t]] * rng.random_range(0.2..1.0))
        .collect();
    let mut booster_nodes: Vec<usize> = (0..nj).collect();
    booster_nodes.shuffle(&mut rng);
    booster_nodes.truncate(spec.boosters);
    booster_nodes.sort_unstable();
    let booster_rate: Vec<f64> = booster_nodes
        .iter()
        .map(|&j| 0.02 * base_demand[j] * rng.random_range(0.5..1.0))
        .collect();

    // Loop pipes between junction pairs, with a declared direction that may
    // oppose the circulation.
    struct Loop {
        a: usize,
        b: usize,
        share: f64,
        reversed: bool,
    }
    let mut loop_defs = Vec::with_capacity(loops);
    for _ in 0..loops {
        let a = rng.random_range(0..nj);
        let mut b = rng.random_range(0..nj - 1);
        if b >= a {
            b += 1;
        }
        loop_defs.push(Loop {
            a,
            b,
            share: rng.random_range(0.05..0.3),
            reversed: rng.random_bool(0.5),
        });
    }

    let depth = |mut j: usize| {
        let mut d = 0;
        while parent.get(j).is_some_and(|&p| p != usize::MAX) {
            j = parent[j];
            d += 1;
        }
        d
    };
    // Tree path between two junctions as (tree edge index, +1 if traversed
    // along the tree direction). Junction j is fed by tree edge j.
    let tree_edge_of = |j: usize| j;
    let path = |mut a: usize, mut b: usize| -> Option<Vec<(usize, f64)>> {
        let mut up = Vec::new();
        let mut down = Vec::new();
        let (mut da, mut db) = (depth(a), depth(b));
        while da > db {
            up.push((tree_edge_of(a), -1.0));
            a = parent[a];
            da -= 1;
        }
        while db > da {
            down.push((tree_edge_of(b), 1.0));
            b = parent[b];
            db -= 1;
        }
        while a != b {
            if parent[a] == usize::MAX || parent[b] == usize::MAX {
                return None;
            }
            up.push((tree_edge_of(a), -1.0));
            down.push((tree_edge_of(b), 1.0));
            a = parent[a];
            b = parent[b];
        }
        down.reverse();
        up.extend(down);
        Some(up)
    };

    let multipliers: Vec<f64> = (0..spec.periods)
        .map(|p| if p == 0 { 1.0 } else { rng.random_range(0.6..1.4) })
        .collect();

    let tree_flows_for = |m: f64| -> Vec<f64> {
        // Net outflow of each junction's own sinks, then accumulate leaves up.
        let mut sink: Vec<f64> = base_demand.iter().map(|d| d * m).collect();
        for t in 0..nt {
            let rate = tank_rate[t] * m;
            if tank_fills[t] {
                sink[tank_site[t]] += rate;
            } else {
                sink[tank_site[t]] -= rate;
            }
        }
        for (k, &j) in booster_nodes.iter().enumerate() {
            sink[j] -= booster_rate[k] * m;
        }
        let mut order: Vec<usize> = (0..nj).collect();
        order.sort_by_key(|&j| std::cmp::Reverse(depth(j)));
        let mut flows = vec![0.0; tree.len()];
        for j in order {
            let f = sink[j];
            if j < nr {
                flows[j] = f;
            } else {
                flows[tree_edge_of(j)] = f;
                sink[parent[j]] += f;
            }
        }
        flows
    };

    let base_tree = tree_flows_for(1.0);
    let mut loop_paths = Vec::with_capacity(loops);
    let mut loop_flow = Vec::with_capacity(loops);
    let mut tree_with_loops = base_tree.clone();
    for l in &loop_defs {
        // Flow a -> b through the loop pipe returns b -> a along the tree.
        let p = path(l.b, l.a);
        let c = match &p {
            Some(p) if !p.is_empty() => {
                let min_tree = p
                    .iter()
                    .map(|&(e, _)| base_tree[e])
                    .fold(f64::INFINITY, f64::min);
                l.share * min_tree / loops as f64
            }
            _ => 0.0,
        };
        let p = p.unwrap_or_default();
        for &(e, s) in &p {
            tree_with_loops[e] += s * c;
        }
        loop_paths.push(p);
        loop_flow.push(c);
    }

    // Size diameters for a target velocity at nominal flow.
    let diameter = |q: f64, rng: &mut ChaCha8Rng| {
        let v: f64 = rng.random_range(0.3..1.0);
        (4.0 * q.abs().max(1e-5) / (std::f64::consts::PI * v)).sqrt()
    };
    let mut pipes = Vec::new();
    let mut pumps = Vec::new();
    let mut valves = Vec::new();
    let node_name = |i: usize| -> String {
        if i < nj {
            format!("J{}", i + 1)
        } else if i < nj + nr {
            format!("R{}", i - nj + 1)
        } else {
            format!("T{}", i - nj - nr + 1)
        }
    };
    let rate = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if spec.reactive {
            rng.random_range(lo..hi)
        } else {
            0.0
        }
    };
    // Link flow builders, in the order the links will be declared.
    enum FlowSource {
        Tree(usize),
        Tank(usize),
        Loop(usize),
    }
    let mut pipe_src = Vec::new();
    let mut pump_src = Vec::new();
    let mut valve_src = Vec::new();
    for (e, edge) in tree.iter().enumerate() {
        let (from, to) = (node_name(edge.from), node_name(edge.to));
        match edge.kind {
            EdgeKind::Pump => {
                pumps.push(Connector {
                    id: format!("M{}", pumps.len() + 1),
                    from,
                    to,
                });
                pump_src.push(FlowSource::Tree(e));
            }
            EdgeKind::Valve => {
                valves.push(Connector {
                    id: format!("V{}", valves.len() + 1),
                    from,
                    to,
                });
                valve_src.push(FlowSource::Tree(e));
            }
            EdgeKind::Pipe => {
                let d = diameter(tree_with_loops[e], &mut rng);
                pipes.push(Pipe {
                    id: format!("P{}", pipes.len() + 1),
                    from,
                    to,
                    length_m: rng.random_range(50.0..500.0),
                    diameter_m: d,
                    kb: rate(&mut rng, -1.0, -0.1),
                    kw: rate(&mut rng, -0.5, -0.05),
                    kf: rng.random_range(0.5..2.0),
                });
                pipe_src.push(FlowSource::Tree(e));
            }
        }
    }
    for t in 0..nt {
        let (a, b) = (tank_site[t], nj + nr + t);
        let (from, to) = if tank_fills[t] { (a, b) } else { (b, a) };
        let d = diameter(tank_rate[t], &mut rng);
        pipes.push(Pipe {
            id: format!("P{}", pipes.len() + 1),
            from: node_name(from),
            to: node_name(to),
            length_m: rng.random_range(50.0..300.0),
            diameter_m: d,
            kb: rate(&mut rng, -1.0, -0.1),
            kw: rate(&mut rng, -0.5, -0.05),
            kf: rng.random_range(0.5..2.0),
        });
        pipe_src.push(FlowSource::Tank(t));
    }
    for (i, l) in loop_defs.iter().enumerate() {
        let (from, to) = if l.reversed { (l.b, l.a) } else { (l.a, l.b) };
        let d = diameter(loop_flow[i].max(1e-4), &mut rng);
        pipes.push(Pipe {
            id: format!("P{}", pipes.len() + 1),
            from: node_name(from),
            to: node_name(to),
            length_m: rng.random_range(50.0..500.0),
            diameter_m: d,
            kb: rate(&mut rng, -1.0, -0.1),
            kw: rate(&mut rng, -0.5, -0.05),
            kf: rng.random_range(0.5..2.0),
        });
        pipe_src.push(FlowSource::Loop(i));
    }

    let junctions = (0..nj).map(|j| Junction { id: node_name(j) }).collect();
    let reservoirs = (0..nr)
        .map(|r| Reservoir {
            id: node_name(nj + r),
            source: if spec.reactive {
                rng.random_range(0.5..1.5)
            } else {
                1.0
            },
        })
        .collect();
    let tanks = (0..nt)
        .map(|t| Tank {
            id: node_name(nj + nr + t),
            kb: rate(&mut rng, -0.5, -0.05),
        })
        .collect();
    let network = WaterNetwork::new(junctions, reservoirs, tanks, pipes, pumps, valves)?;

    let mut volumes: Vec<f64> = (0..nt)
        .map(|t| {
            let through = tank_rate[t] * 1.4 * spec.period_s * spec.periods as f64;
            through * rng.random_range(2.0..4.0) + 10.0
        })
        .collect();
    let mut periods = Vec::with_capacity(spec.periods);
    for &m in &multipliers {
        let mut tf = tree_flows_for(m);
        for (i, p) in loop_paths.iter().enumerate() {
            for &(e, s) in p {
                tf[e] += s * loop_flow[i] * m;
            }
        }
        let flow_of = |src: &FlowSource| match *src {
            FlowSource::Tree(e) => tf[e],
            FlowSource::Tank(t) => tank_rate[t] * m,
            FlowSource::Loop(i) => {
                let q = loop_flow[i] * m;
                if loop_defs[i].reversed {
                    -q
                } else {
                    q
                }
            }
        };
        let flows: Vec<f64> = pipe_src
            .iter()
            .chain(&pump_src)
            .chain(&valve_src)
            .map(flow_of)
            .collect();
        let mut booster_flows = vec![0.0; network.node_count()];
        for (k, &j) in booster_nodes.iter().enumerate() {
            booster_flows[j] = booster_rate[k] * m;
        }
        periods.push(HydraulicPeriod {
            duration_s: spec.period_s,
            flows,
            demands: base_demand.iter().map(|d| d * m).collect(),
            volumes: volumes.clone(),
            booster_flows,
        });
        for t in 0..nt {
            let dv = tank_rate[t] * m * spec.period_s;
            volumes[t] += if tank_fills[t] { dv } else { -dv };
        }
    }
    let hydraulics = HydraulicProfile::from_periods(&network, periods)?;
    let boosters = booster_nodes.iter().map(|&j| node_name(j)).collect();
    Ok(SyntheticNetwork {
        network,
        hydraulics,
        boosters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_network, serialize_network};
    use proptest::prelude::*;

    #[test]
    fn net3_counts() {
        let s = generate(&SyntheticSpec::net3_scale(7)).unwrap();
        assert_eq!(s.network.counts().as_array(), [92, 2, 3, 117, 2, 0]);
        assert!(s.hydraulics.is_consistent());
        assert_eq!(s.boosters.len(), 92);
    }

    #[test]
    fn same_seed_same_network() {
        let a = generate(&SyntheticSpec::net3_scale(3)).unwrap();
        let b = generate(&SyntheticSpec::net3_scale(3)).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.hydraulics, b.hydraulics);
    }

    #[test]
    fn rejects_impossible_counts() {
        let mut s = SyntheticSpec::net3_scale(1);
        s.pipes = 10;
        assert!(generate(&s).is_err());
        s = SyntheticSpec::net3_scale(1);
        s.pumps = 1;
        assert!(generate(&s).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn small_networks_balance(seed in 0u64..10_000) {
            let s = generate(&SyntheticSpec::random_small(seed, 20)).unwrap();
            prop_assert!(s.network.node_count() <= 20);
            prop_assert!(s.hydraulics.is_consistent());
            for p in s.hydraulics.periods() {
                prop_assert!(p.volumes.iter().all(|v| *v > 0.0));
            }
        }

        #[test]
        fn parser_round_trip(seed in 0u64..10_000) {
            let s = generate(&SyntheticSpec::random_small(seed, 20)).unwrap();
            let back = parse_network(&serialize_network(&s.network)).unwrap();
            prop_assert_eq!(back, s.network);
        }
    }
}
