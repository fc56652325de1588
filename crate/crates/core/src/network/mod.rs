//! Network topology, hydraulic schedules and the connectivity matrices built
//! from them.

mod booster;
mod hydraulics;
mod incidence;
mod parser;
mod selection;
pub mod synthetic;

pub use booster::BoosterLayout;
pub use hydraulics::{HydraulicPeriod, HydraulicProfile, BALANCE_TOLERANCE};
pub use incidence::IncidenceSet;
pub use parser::{parse_network, serialize_network};
pub use selection::{segment_selectors, SelectionSet};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Junction,
    Reservoir,
    Tank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Pipe,
    Pump,
    Valve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub id: String,
    /// Fixed source concentration, mg/L.
    pub source: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tank {
    pub id: String,
    /// Bulk decay constant, 1/h.
    pub kb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipe {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub diameter_m: f64,
    /// Bulk rate constant, 1/h.
    pub kb: f64,
    /// Wall rate constant, 1/h.
    pub kw: f64,
    /// Bulk-to-wall mass-transfer coefficient, 1/h.
    pub kf: f64,
}

impl Pipe {
    pub fn area_m2(&self) -> f64 {
        std::f64::consts::PI * self.diameter_m * self.diameter_m / 4.0
    }
}

/// Pumps and valves share a representation: zero length, no storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// Component counts `{n_J, n_R, n_TK, n_P, n_M, n_V}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub junctions: usize,
    pub reservoirs: usize,
    pub tanks: usize,
    pub pipes: usize,
    pub pumps: usize,
    pub valves: usize,
}

impl ComponentCounts {
    pub fn nodes(&self) -> usize {
        self.junctions + self.reservoirs + self.tanks
    }

    pub fn links(&self) -> usize {
        self.pipes + self.pumps + self.valves
    }

    pub fn as_array(&self) -> [usize; 6] {
        [
            self.junctions,
            self.reservoirs,
            self.tanks,
            self.pipes,
            self.pumps,
            self.valves,
        ]
    }
}

impl std::fmt::Display for ComponentCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.as_array();
        write!(f, "{{{},{},{},{},{},{}}}", a[0], a[1], a[2], a[3], a[4], a[5])
    }
}

/// A validated water distribution network.
///
/// Nodes are indexed junctions first, then reservoirs, then tanks; links are
/// indexed pipes, pumps, valves. Both orders follow declaration order and are
/// the orders used by every matrix in the crate.
#[derive(Debug, Clone)]
pub struct WaterNetwork {
    pub junctions: Vec<Junction>,
    pub reservoirs: Vec<Reservoir>,
    pub tanks: Vec<Tank>,
    pub pipes: Vec<Pipe>,
    pub pumps: Vec<Connector>,
    pub valves: Vec<Connector>,
    node_index: HashMap<String, usize>,
    link_index: HashMap<String, usize>,
    link_ends: Vec<(usize, usize)>,
}

impl PartialEq for WaterNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.junctions == other.junctions
            && self.reservoirs == other.reservoirs
            && self.tanks == other.tanks
            && self.pipes == other.pipes
            && self.pumps == other.pumps
            && self.valves == other.valves
    }
}

impl WaterNetwork {
    /// Validate the components and build the id indices.
    pub fn new(
        junctions: Vec<Junction>,
        reservoirs: Vec<Reservoir>,
        tanks: Vec<Tank>,
        pipes: Vec<Pipe>,
        pumps: Vec<Connector>,
        valves: Vec<Connector>,
    ) -> Result<Self> {
        let mut net = WaterNetwork {
            junctions,
            reservoirs,
            tanks,
            pipes,
            pumps,
            valves,
            node_index: HashMap::new(),
            link_index: HashMap::new(),
            link_ends: Vec::new(),
        };
        net.index()?;
        Ok(net)
    }

    fn index(&mut self) -> Result<()> {
        if self.node_count() == 0 {
            return Err(Error::InvalidNetwork("no nodes defined".into()));
        }
        let node_ids: Vec<String> = self
            .junctions
            .iter()
            .map(|j| j.id.clone())
            .chain(self.reservoirs.iter().map(|r| r.id.clone()))
            .chain(self.tanks.iter().map(|t| t.id.clone()))
            .collect();
        for (i, id) in node_ids.into_iter().enumerate() {
            if self.node_index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate id '{id}'")));
            }
        }
        for r in &self.reservoirs {
            if !r.source.is_finite() || r.source < 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "reservoir '{}' has invalid source concentration {}",
                    r.id, r.source
                )));
            }
        }
        for p in &self.pipes {
            if !(p.length_m > 0.0) || !p.length_m.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "pipe '{}' has nonpositive length {}",
                    p.id, p.length_m
                )));
            }
            if !(p.diameter_m > 0.0) || !p.diameter_m.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "pipe '{}' has nonpositive diameter {}",
                    p.id, p.diameter_m
                )));
            }
        }
        let links: Vec<(String, String, String)> = self
            .pipes
            .iter()
            .map(|p| (p.id.clone(), p.from.clone(), p.to.clone()))
            .chain(
                self.pumps
                    .iter()
                    .chain(self.valves.iter())
                    .map(|c| (c.id.clone(), c.from.clone(), c.to.clone())),
            )
            .collect();
        for (k, (id, from, to)) in links.into_iter().enumerate() {
            if self.node_index.contains_key(&id) || self.link_index.insert(id.clone(), k).is_some()
            {
                return Err(Error::InvalidNetwork(format!("duplicate id '{id}'")));
            }
            let up = *self.node_index.get(&from).ok_or_else(|| {
                Error::InvalidNetwork(format!("link '{id}' references unknown node '{from}'"))
            })?;
            let down = *self.node_index.get(&to).ok_or_else(|| {
                Error::InvalidNetwork(format!("link '{id}' references unknown node '{to}'"))
            })?;
            if up == down {
                return Err(Error::InvalidNetwork(format!(
                    "link '{id}' connects node '{from}' to itself"
                )));
            }
            self.link_ends.push((up, down));
        }
        Ok(())
    }

    pub fn counts(&self) -> ComponentCounts {
        ComponentCounts {
            junctions: self.junctions.len(),
            reservoirs: self.reservoirs.len(),
            tanks: self.tanks.len(),
            pipes: self.pipes.len(),
            pumps: self.pumps.len(),
            valves: self.valves.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.junctions.len() + self.reservoirs.len() + self.tanks.len()
    }

    pub fn link_count(&self) -> usize {
        self.pipes.len() + self.pumps.len() + self.valves.len()
    }

    pub fn node_position(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn link_position(&self, id: &str) -> Option<usize> {
        self.link_index.get(id).copied()
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        let nj = self.junctions.len();
        let nr = self.reservoirs.len();
        if node < nj {
            NodeKind::Junction
        } else if node < nj + nr {
            NodeKind::Reservoir
        } else {
            NodeKind::Tank
        }
    }

    pub fn link_kind(&self, link: usize) -> LinkKind {
        let np = self.pipes.len();
        let nm = self.pumps.len();
        if link < np {
            LinkKind::Pipe
        } else if link < np + nm {
            LinkKind::Pump
        } else {
            LinkKind::Valve
        }
    }

    pub fn node_id(&self, node: usize) -> &str {
        let nj = self.junctions.len();
        let nr = self.reservoirs.len();
        match self.node_kind(node) {
            NodeKind::Junction => &self.junctions[node].id,
            NodeKind::Reservoir => &self.reservoirs[node - nj].id,
            NodeKind::Tank => &self.tanks[node - nj - nr].id,
        }
    }

    pub fn link_id(&self, link: usize) -> &str {
        let np = self.pipes.len();
        let nm = self.pumps.len();
        match self.link_kind(link) {
            LinkKind::Pipe => &self.pipes[link].id,
            LinkKind::Pump => &self.pumps[link - np].id,
            LinkKind::Valve => &self.valves[link - np - nm].id,
        }
    }

    /// Declared (upstream, downstream) node positions of a link.
    pub fn link_ends(&self, link: usize) -> (usize, usize) {
        self.link_ends[link]
    }

    /// Offset of the first node of `kind` in the node order.
    pub fn node_offset(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Junction => 0,
            NodeKind::Reservoir => self.junctions.len(),
            NodeKind::Tank => self.junctions.len() + self.reservoirs.len(),
        }
    }

    pub fn node_range(&self, kind: NodeKind) -> std::ops::Range<usize> {
        let start = self.node_offset(kind);
        let len = match kind {
            NodeKind::Junction => self.junctions.len(),
            NodeKind::Reservoir => self.reservoirs.len(),
            NodeKind::Tank => self.tanks.len(),
        };
        start..start + len
    }

    pub fn link_range(&self, kind: LinkKind) -> std::ops::Range<usize> {
        let np = self.pipes.len();
        let nm = self.pumps.len();
        match kind {
            LinkKind::Pipe => 0..np,
            LinkKind::Pump => np..np + nm,
            LinkKind::Valve => np + nm..np + nm + self.valves.len(),
        }
    }

    /// Reservoir source concentration for a node position, if it is one.
    pub fn reservoir_source(&self, node: usize) -> Option<f64> {
        (self.node_kind(node) == NodeKind::Reservoir)
            .then(|| self.reservoirs[node - self.junctions.len()].source)
    }

    /// Copy of the network with every pipe's bulk and wall constants scaled.
    pub fn with_scaled_reaction(&self, bulk: &[f64], wall: &[f64]) -> WaterNetwork {
        let mut net = self.clone();
        for ((p, b), w) in net.pipes.iter_mut().zip(bulk).zip(wall) {
            p.kb *= b;
            p.kw *= w;
        }
        net
    }
}
