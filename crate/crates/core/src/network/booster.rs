use nalgebra::DMatrix;

use super::{NodeKind, WaterNetwork};
use crate::error::{Error, Result};

/// Booster-to-node placement `E^B_N`: a binary diagonal over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoosterLayout {
    installed: Vec<bool>,
    nodes: Vec<usize>,
    split: [usize; 3],
}

impl BoosterLayout {
    /// Place one booster at each listed node id.
    pub fn build<S: AsRef<str>>(net: &WaterNetwork, booster_nodes: &[S]) -> Result<Self> {
        let mut installed = vec![false; net.node_count()];
        let mut nodes = Vec::with_capacity(booster_nodes.len());
        for id in booster_nodes {
            let id = id.as_ref();
            let pos = net
                .node_position(id)
                .ok_or_else(|| Error::Config(format!("booster at unknown node '{id}'")))?;
            if installed[pos] {
                return Err(Error::Config(format!(
                    "node '{id}' listed twice: at most one booster per node"
                )));
            }
            installed[pos] = true;
            nodes.push(pos);
        }
        nodes.sort_unstable();
        let c = net.counts();
        Ok(BoosterLayout {
            installed,
            nodes,
            split: [c.junctions, c.reservoirs, c.tanks],
        })
    }

    /// A booster at every node.
    pub fn everywhere(net: &WaterNetwork) -> Self {
        let c = net.counts();
        BoosterLayout {
            installed: vec![true; net.node_count()],
            nodes: (0..net.node_count()).collect(),
            split: [c.junctions, c.reservoirs, c.tanks],
        }
    }

    pub fn has_booster(&self, node: usize) -> bool {
        self.installed[node]
    }

    /// Booster node positions in node order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// `n_B`.
    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.installed.len(),
            self.installed.iter().map(|&b| if b { 1.0 } else { 0.0 }),
        ))
    }

    /// Diagonal block `E^b_X` for one node class.
    pub fn block(&self, kind: NodeKind) -> DMatrix<f64> {
        let [j, r, t] = self.split;
        let (start, len) = match kind {
            NodeKind::Junction => (0, j),
            NodeKind::Reservoir => (j, r),
            NodeKind::Tank => (j + r, t),
        };
        self.matrix().view((start, start), (len, len)).into_owned()
    }
}
