use nalgebra::DMatrix;

use super::{LinkKind, NodeKind, WaterNetwork};
use crate::error::{Error, Result};

/// Node-link connectivity `E^G` with entries in {-1, 0, +1}.
///
/// Rows are nodes (junctions, reservoirs, tanks), columns are links (pipes,
/// pumps, valves). A column holds +1 at its upstream node and -1 at its
/// downstream node. After [`IncidenceSet::orient_by_flow`] the orientation
/// matches the sign of the flow and the stored flows are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    n_nodes: usize,
    ends: Vec<(usize, usize)>,
    flipped: Vec<bool>,
    flows: Option<Vec<f64>>,
    node_split: [usize; 3],
    link_split: [usize; 3],
}

impl IncidenceSet {
    /// Incidence with the declared link directions.
    pub fn build(net: &WaterNetwork) -> Self {
        let c = net.counts();
        IncidenceSet {
            n_nodes: net.node_count(),
            ends: (0..net.link_count()).map(|k| net.link_ends(k)).collect(),
            flipped: vec![false; net.link_count()],
            flows: None,
            node_split: [c.junctions, c.reservoirs, c.tanks],
            link_split: [c.pipes, c.pumps, c.valves],
        }
    }

    /// Re-orient every link along its flow. Negative-flow columns flip sign
    /// and store the magnitude; zero-flow links keep the declared direction.
    /// Orientation is always relative to the declared direction, so calling
    /// this twice with the same flows gives the same result.
    pub fn orient_by_flow(&self, flows: &[f64]) -> Result<IncidenceSet> {
        if flows.len() != self.ends.len() {
            return Err(Error::Dimension {
                what: "link flow vector",
                expected: self.ends.len(),
                found: flows.len(),
            });
        }
        let mut out = self.clone();
        for (k, &q) in flows.iter().enumerate() {
            let (a, b) = self.declared_ends(k);
            let flip = q < 0.0;
            out.ends[k] = if flip { (b, a) } else { (a, b) };
            out.flipped[k] = flip;
        }
        out.flows = Some(flows.iter().map(|q| q.abs()).collect());
        Ok(out)
    }

    fn declared_ends(&self, k: usize) -> (usize, usize) {
        let (u, d) = self.ends[k];
        if self.flipped[k] {
            (d, u)
        } else {
            (u, d)
        }
    }

    pub fn is_oriented(&self) -> bool {
        self.flows.is_some()
    }

    pub fn node_count(&self) -> usize {
        self.n_nodes
    }

    pub fn link_count(&self) -> usize {
        self.ends.len()
    }

    /// Current (upstream, downstream) of a link.
    pub fn ends(&self, link: usize) -> (usize, usize) {
        self.ends[link]
    }

    /// Whether the link runs against its declared direction.
    pub fn is_flipped(&self, link: usize) -> bool {
        self.flipped[link]
    }

    /// Nonnegative oriented flows, present once oriented.
    pub fn flows(&self) -> Option<&[f64]> {
        self.flows.as_deref()
    }

    pub fn flow(&self, link: usize) -> f64 {
        self.flows.as_ref().map_or(0.0, |f| f[link])
    }

    /// Dense `E^G`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_nodes, self.ends.len());
        for (k, &(u, d)) in self.ends.iter().enumerate() {
            m[(u, k)] = 1.0;
            m[(d, k)] = -1.0;
        }
        m
    }

    fn node_range(&self, kind: NodeKind) -> std::ops::Range<usize> {
        let [j, r, t] = self.node_split;
        match kind {
            NodeKind::Junction => 0..j,
            NodeKind::Reservoir => j..j + r,
            NodeKind::Tank => j + r..j + r + t,
        }
    }

    fn link_range(&self, kind: LinkKind) -> std::ops::Range<usize> {
        let [p, m, v] = self.link_split;
        match kind {
            LinkKind::Pipe => 0..p,
            LinkKind::Pump => p..p + m,
            LinkKind::Valve => p + m..p + m + v,
        }
    }

    /// Named block, e.g. `E^P_J` is `block(Junction, Pipe)`.
    pub fn block(&self, node: NodeKind, link: LinkKind) -> DMatrix<f64> {
        let rows = self.node_range(node);
        let cols = self.link_range(link);
        self.matrix()
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// Row block `E^L_X` over all links for one node class.
    pub fn node_block(&self, node: NodeKind) -> DMatrix<f64> {
        let rows = self.node_range(node);
        self.matrix().rows(rows.start, rows.len()).into_owned()
    }

    /// Column block `(E^N_X)^T` over all nodes for one link class.
    pub fn link_block(&self, link: LinkKind) -> DMatrix<f64> {
        let cols = self.link_range(link);
        self.matrix().columns(cols.start, cols.len()).into_owned()
    }
}
