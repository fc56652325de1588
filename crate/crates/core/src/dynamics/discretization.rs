use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LinkKind, WaterNetwork};

/// Spatial grid of every pipe plus the water-quality time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    segments: Vec<usize>,
    dx: Vec<f64>,
    dt_s: f64,
}

impl Discretization {
    /// Per-pipe segment counts and a time step in seconds.
    pub fn new(net: &WaterNetwork, segments: Vec<usize>, dt_s: f64) -> Result<Self> {
        if segments.len() != net.pipes.len() {
            return Err(Error::Dimension {
                what: "segment counts",
                expected: net.pipes.len(),
                found: segments.len(),
            });
        }
        if let Some(p) = segments.iter().position(|&s| s == 0) {
            return Err(Error::Config(format!(
                "pipe '{}' needs at least one segment",
                net.pipes[p].id
            )));
        }
        if !(dt_s > 0.0) || !dt_s.is_finite() {
            return Err(Error::Config(format!("time step {dt_s} must be positive")));
        }
        let dx = net
            .pipes
            .iter()
            .zip(&segments)
            .map(|(p, &s)| p.length_m / s as f64)
            .collect();
        Ok(Discretization {
            segments,
            dx,
            dt_s,
        })
    }

    /// Same segment count for every pipe.
    pub fn uniform(net: &WaterNetwork, segments: usize, dt_s: f64) -> Result<Self> {
        Self::new(net, vec![segments; net.pipes.len()], dt_s)
    }

    pub fn segments(&self) -> &[usize] {
        &self.segments
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    /// `n_S`.
    pub fn total_segments(&self) -> usize {
        self.segments.iter().sum()
    }

    pub fn with_dt(&self, dt_s: f64) -> Self {
        Discretization {
            dt_s,
            ..self.clone()
        }
    }
}

/// Largest stable step `min Δx/|v|` over pipes that carry flow.
pub fn max_stable_step(net: &WaterNetwork, segments: &[usize], flows: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (k, p) in net.pipes.iter().enumerate() {
        let v = flows[k].abs() / p.area_m2();
        if v > 0.0 {
            best = best.min(p.length_m / segments[k] as f64 / v);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Stagnant)
    }
}

/// Round a stable step down so that `period_s` is a whole number of steps.
///
/// Steps of at least a second become the largest integer divisor of the
/// period not above the bound; shorter steps become `period / n` for the
/// smallest admissible `n`.
pub fn fit_step(bound_s: f64, period_s: f64) -> f64 {
    let whole_period = period_s.fract() == 0.0 && period_s <= u64::MAX as f64;
    if bound_s >= 1.0 && whole_period {
        let p = period_s as u64;
        let mut d = (bound_s.floor() as u64).min(p);
        while d > 1 && !p.is_multiple_of(d) {
            d -= 1;
        }
        return d.max(1) as f64;
    }
    let n = (period_s / bound_s).ceil();
    period_s / n
}

/// Water-quality step for one hydraulic period: the CFL bound rounded to a
/// divisor of the period.
pub fn compute_time_step(
    net: &WaterNetwork,
    segments: &[usize],
    flows: &[f64],
    period_s: f64,
) -> Result<f64> {
    if flows.len() != net.link_count() {
        return Err(Error::Dimension {
            what: "link flow vector",
            expected: net.link_count(),
            found: flows.len(),
        });
    }
    Ok(fit_step(max_stable_step(net, segments, flows)?, period_s))
}

/// Named entity resolved into state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Node(usize),
    /// Pipe position and zero-based declared segment.
    Segment(usize, usize),
    /// Every segment of a pipe.
    Pipe(usize),
    Connector(usize),
}

/// Layout of the state vector: nodes (junctions, reservoirs, tanks), then pipe
/// segments pipe by pipe in declared upstream-to-downstream order, then
/// pumps, then valves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateIndexMap {
    n_nodes: usize,
    segment_offsets: Vec<usize>,
    segments: Vec<usize>,
    n_pumps: usize,
    n_valves: usize,
}

impl StateIndexMap {
    pub fn new(net: &WaterNetwork, segments: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(segments.len());
        let mut at = net.node_count();
        for &s in segments {
            offsets.push(at);
            at += s;
        }
        StateIndexMap {
            n_nodes: net.node_count(),
            segment_offsets: offsets,
            segments: segments.to_vec(),
            n_pumps: net.pumps.len(),
            n_valves: net.valves.len(),
        }
    }

    /// `n_x`.
    pub fn len(&self) -> usize {
        self.n_nodes + self.total_segments() + self.n_pumps + self.n_valves
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node_count(&self) -> usize {
        self.n_nodes
    }

    pub fn total_segments(&self) -> usize {
        self.segments.iter().sum()
    }

    pub fn node(&self, node: usize) -> usize {
        node
    }

    /// State index of declared segment `seg` (zero-based) of pipe `pipe`.
    pub fn segment(&self, pipe: usize, seg: usize) -> usize {
        self.segment_offsets[pipe] + seg
    }

    pub fn pipe_range(&self, pipe: usize) -> std::ops::Range<usize> {
        let o = self.segment_offsets[pipe];
        o..o + self.segments[pipe]
    }

    pub fn segment_block(&self) -> std::ops::Range<usize> {
        self.n_nodes..self.n_nodes + self.total_segments()
    }

    /// State index of a pump or valve given its link position.
    pub fn connector(&self, link: usize) -> usize {
        let n_pipes = self.segments.len();
        self.n_nodes + self.total_segments() + (link - n_pipes)
    }

    /// State indices covered by an entity.
    pub fn indices(&self, e: Entity) -> Vec<usize> {
        match e {
            Entity::Node(i) => vec![self.node(i)],
            Entity::Segment(p, s) => vec![self.segment(p, s)],
            Entity::Pipe(p) => self.pipe_range(p).collect(),
            Entity::Connector(k) => vec![self.connector(k)],
        }
    }

    /// Resolve `J2`, `M12`, `P23` (all segments) or `P23:3` (1-based segment).
    pub fn resolve(&self, net: &WaterNetwork, name: &str) -> Result<Entity> {
        let unknown = || Error::Config(format!("unknown entity '{name}'"));
        if let Some(i) = net.node_position(name) {
            return Ok(Entity::Node(i));
        }
        if let Some(k) = net.link_position(name) {
            return Ok(match net.link_kind(k) {
                LinkKind::Pipe => Entity::Pipe(k),
                _ => Entity::Connector(k),
            });
        }
        let (pipe, seg) = name.rsplit_once(':').ok_or_else(unknown)?;
        let k = net
            .link_position(pipe)
            .filter(|&k| net.link_kind(k) == LinkKind::Pipe)
            .ok_or_else(unknown)?;
        let s: usize = seg.parse().map_err(|_| unknown())?;
        if s == 0 || s > self.segments[k] {
            return Err(Error::Config(format!(
                "pipe '{pipe}' has {} segments, asked for {s}",
                self.segments[k]
            )));
        }
        Ok(Entity::Segment(k, s - 1))
    }

    /// Label of every state index.
    pub fn labels(&self, net: &WaterNetwork) -> Vec<String> {
        let mut out: Vec<String> = (0..self.n_nodes).map(|i| net.node_id(i).to_string()).collect();
        for (p, &s) in self.segments.iter().enumerate() {
            out.extend((1..=s).map(|k| format!("{}:{k}", net.pipes[p].id)));
        }
        let n_pipes = self.segments.len();
        out.extend(
            (n_pipes..n_pipes + self.n_pumps + self.n_valves).map(|k| net.link_id(k).to_string()),
        );
        out
    }

    /// Entity label → state index, sorted by label.
    pub fn to_map(&self, net: &WaterNetwork) -> BTreeMap<String, usize> {
        self.labels(net)
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn one_pipe(length: f64, diameter: f64) -> WaterNetwork {
        parse_network(&format!(
            "[JUNCTIONS]\nA\nB\n[PIPES]\nP A B {length} {diameter} 0 0 0\n"
        ))
        .unwrap()
    }

    #[test]
    fn direct_and_minimum() {
        // Δx = 10 m, v = 2 m/s
        let net = one_pipe(100.0, 1.0);
        let q = 2.0 * net.pipes[0].area_m2();
        assert_eq!(compute_time_step(&net, &[10], &[q], 3600.0).unwrap(), 5.0);

        let net = parse_network(
            "[JUNCTIONS]\nA\nB\nC\n[PIPES]\nP1 A B 10 1 0 0 0\nP2 B C 4 1 0 0 0\n",
        )
        .unwrap();
        let a = net.pipes[0].area_m2();
        assert_eq!(compute_time_step(&net, &[1, 1], &[2.0 * a, 2.0 * a], 60.0).unwrap(), 2.0);
    }

    #[test]
    fn rounds_to_divisor() {
        for bound in 1..=60u64 {
            let got = fit_step(bound as f64 + 0.5, 3600.0) as u64;
            let oracle = (1..=bound).rev().find(|d| 3600 % d == 0).unwrap();
            assert_eq!(got, oracle, "bound {bound}");
        }
        assert_eq!(fit_step(7.0, 3600.0), 6.0);
        let sub = fit_step(0.3, 10.0);
        assert!(sub <= 0.3 && (10.0 / sub).fract().abs() < 1e-9);
    }

    #[test]
    fn stagnant() {
        let net = one_pipe(100.0, 1.0);
        assert!(matches!(
            compute_time_step(&net, &[10], &[0.0], 3600.0),
            Err(Error::Stagnant)
        ));
    }

    #[test]
    fn index_map_is_bijective() {
        let net = parse_network(include_str!("../../data/five-node.inp")).unwrap();
        let map = StateIndexMap::new(&net, &[3, 2, 4]);
        assert_eq!(map.len(), 5 + 9 + 1 + 1);
        let labels = map.labels(&net);
        assert_eq!(labels.len(), map.len());
        let m = map.to_map(&net);
        assert_eq!(m.len(), map.len());
        assert_eq!(m["P24:1"], 8);
        assert_eq!(m["M12"], 14);
        assert_eq!(m["V34"], 15);
        assert_eq!(map.resolve(&net, "P23:3").unwrap(), Entity::Segment(0, 2));
        assert_eq!(map.indices(map.resolve(&net, "P24").unwrap()), vec![8, 9]);
        assert!(map.resolve(&net, "P23:4").is_err());
        assert!(map.resolve(&net, "X").is_err());
    }
}
