use nalgebra::DMatrix;

use super::{IncidenceSet, LinkKind, NodeKind, WaterNetwork};
use crate::error::{Error, Result};

/// Binary selectors derived from a flow-oriented incidence.
///
/// `out` and `inflow` are node × link: `out[(i, k)] = 1` when link `k` leaves
/// node `i` along the flow, `inflow[(i, k)] = 1` when it enters. Zero-flow
/// links are kept in the selectors; their flux vanishes later through the
/// flow weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSet {
    out: DMatrix<f64>,
    inflow: DMatrix<f64>,
    pump_upstream: DMatrix<f64>,
    valve_upstream: DMatrix<f64>,
    node_split: [usize; 3],
}

impl SelectionSet {
    pub fn build(net: &WaterNetwork, inc: &IncidenceSet) -> Result<Self> {
        if !inc.is_oriented() {
            return Err(Error::Model(
                "selection matrices need a flow-oriented incidence".into(),
            ));
        }
        let e = inc.matrix();
        let out = e.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let inflow = e.map(|v| if v < 0.0 { 1.0 } else { 0.0 });
        let upstream = |kind: LinkKind| {
            let links = net.link_range(kind);
            let mut s = DMatrix::zeros(links.len(), net.node_count());
            for (r, k) in links.enumerate() {
                s[(r, inc.ends(k).0)] = 1.0;
            }
            s
        };
        let c = net.counts();
        Ok(SelectionSet {
            out,
            inflow,
            pump_upstream: upstream(LinkKind::Pump),
            valve_upstream: upstream(LinkKind::Valve),
            node_split: [c.junctions, c.reservoirs, c.tanks],
        })
    }

    fn rows(&self, m: &DMatrix<f64>, kind: NodeKind) -> DMatrix<f64> {
        let [j, r, t] = self.node_split;
        let (start, len) = match kind {
            NodeKind::Junction => (0, j),
            NodeKind::Reservoir => (j, r),
            NodeKind::Tank => (j + r, t),
        };
        m.rows(start, len).into_owned()
    }

    /// `S^out` restricted to one node class (`S^out_J`, `S^out_TK`).
    pub fn outflow(&self, kind: NodeKind) -> DMatrix<f64> {
        self.rows(&self.out, kind)
    }

    /// `S^in` restricted to one node class.
    pub fn inflow(&self, kind: NodeKind) -> DMatrix<f64> {
        self.rows(&self.inflow, kind)
    }

    /// `S^N_M`: pump × node, one 1 per row at the pump's upstream node.
    pub fn pump_upstream(&self) -> &DMatrix<f64> {
        &self.pump_upstream
    }

    /// `S^N_V`: valve × node.
    pub fn valve_upstream(&self) -> &DMatrix<f64> {
        &self.valve_upstream
    }

    /// Links entering node `i` along the flow.
    pub fn inflow_links(&self, node: usize) -> Vec<usize> {
        ones(self.inflow.row(node).iter())
    }

    /// Links leaving node `i` along the flow.
    pub fn outflow_links(&self, node: usize) -> Vec<usize> {
        ones(self.out.row(node).iter())
    }
}

fn ones<'a>(it: impl Iterator<Item = &'a f64>) -> Vec<usize> {
    it.enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(k, _)| k)
        .collect()
}

/// Pipe × segment selectors over the stacked segment vector, picking each
/// pipe's first and last segment along the flow. Reversed pipes pick the
/// opposite ends of their declared segment range.
pub fn segment_selectors(
    segments: &[usize],
    reversed: &[bool],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n_s: usize = segments.iter().sum();
    let mut first = DMatrix::zeros(segments.len(), n_s);
    let mut last = DMatrix::zeros(segments.len(), n_s);
    let mut offset = 0;
    for (p, (&s, &rev)) in segments.iter().zip(reversed).enumerate() {
        let (a, b) = (offset, offset + s - 1);
        let (f, l) = if rev { (b, a) } else { (a, b) };
        first[(p, f)] = 1.0;
        last[(p, l)] = 1.0;
        offset += s;
    }
    (first, last)
}
