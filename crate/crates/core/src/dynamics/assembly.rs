use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;

use super::discretization::{Discretization, StateIndexMap};
use super::lax_wendroff::lw_coefficients;
use super::reaction::{pipe_reaction_constant, ReactionFold};
use crate::error::{Error, Result};
use crate::network::{
    BoosterLayout, HydraulicPeriod, HydraulicProfile, IncidenceSet, LinkKind, NodeKind,
    SelectionSet, WaterNetwork,
};
use crate::par::{self, Execution};
use crate::units::SECONDS_PER_HOUR;

/// CFL numbers this far above one are treated as rounding noise.
const CFL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    pub reaction: ReactionFold,
}

/// One entry of the dependence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Pipe(usize),
    Node(usize),
    /// Pump or valve, by link position.
    Connector(usize),
}

/// Sparse LDE `x(t+Δt) = A x(t) + B u(t)` for one hydraulic period.
#[derive(Debug, Clone)]
pub struct StateSpaceSystem {
    pub a: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
    pub dt_s: f64,
    pub period: usize,
    pub map: StateIndexMap,
    /// CFL number of every pipe.
    pub cfl: Vec<f64>,
}

type Row = Vec<(usize, f64)>;

/// Sum of weighted sparse rows, sorted by column with duplicates merged.
fn combine<'a>(parts: impl IntoIterator<Item = (&'a Row, f64)>) -> Row {
    let mut out: Row = Vec::new();
    for (row, w) in parts {
        if w != 0.0 {
            out.extend(row.iter().map(|&(c, v)| (c, v * w)));
        }
    }
    out.sort_by_key(|e| e.0);
    let mut merged: Row = Vec::with_capacity(out.len());
    for (c, v) in out {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => merged.push((c, v)),
        }
    }
    merged.retain(|e| e.1 != 0.0);
    merged
}

fn to_csr(rows: Vec<Row>, ncols: usize) -> CsrMatrix<f64> {
    let nrows = rows.len();
    let mut offsets = Vec::with_capacity(nrows + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    CsrMatrix::try_from_csr_data(nrows, ncols, offsets, cols, vals)
        .expect("rows are sorted and in range")
}

/// `y += M x` for a CSR matrix.
pub fn spmv_add(m: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    for (i, row) in m.row_iter().enumerate() {
        let mut acc = 0.0;
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            acc += v * x[c];
        }
        y[i] += acc;
    }
}

/// Order in which component equations become available: pipes, nodes not
/// fed by a pump or valve, then pumps, valves and the nodes they feed in
/// dependency order.
pub fn dependence_order(net: &WaterNetwork, inc: &IncidenceSet) -> Result<Vec<Component>> {
    let n_nodes = net.node_count();
    let connectors: Vec<usize> = net
        .link_range(LinkKind::Pump)
        .chain(net.link_range(LinkKind::Valve))
        .collect();
    let mut waiting = vec![0usize; n_nodes];
    for &k in &connectors {
        waiting[inc.ends(k).1] += 1;
    }
    let mut order: Vec<Component> = net.link_range(LinkKind::Pipe).map(Component::Pipe).collect();
    let mut done = vec![false; n_nodes];
    for i in 0..n_nodes {
        if waiting[i] == 0 {
            order.push(Component::Node(i));
            done[i] = true;
        }
    }
    let mut placed = vec![false; connectors.len()];
    let mut remaining = connectors.len();
    while remaining > 0 {
        let mut progressed = false;
        for (c, &k) in connectors.iter().enumerate() {
            let (up, down) = inc.ends(k);
            if placed[c] || !done[up] {
                continue;
            }
            placed[c] = true;
            remaining -= 1;
            progressed = true;
            order.push(Component::Connector(k));
            waiting[down] -= 1;
            if waiting[down] == 0 {
                order.push(Component::Node(down));
                done[down] = true;
            }
        }
        if !progressed {
            let stuck: Vec<&str> = connectors
                .iter()
                .zip(&placed)
                .filter(|(_, &p)| !p)
                .map(|(&k, _)| net.link_id(k))
                .collect();
            return Err(Error::Model(format!(
                "pumps/valves form a cycle: {}",
                stuck.join(", ")
            )));
        }
    }
    Ok(order)
}

/// Assemble `A` and `B` for one hydraulic period.
pub fn assemble_system(
    net: &WaterNetwork,
    boosters: &BoosterLayout,
    hyd: &HydraulicPeriod,
    period: usize,
    disc: &Discretization,
    opts: AssemblyOptions,
) -> Result<StateSpaceSystem> {
    let inc = IncidenceSet::build(net).orient_by_flow(&hyd.flows)?;
    let sel = SelectionSet::build(net, &inc)?;
    let map = StateIndexMap::new(net, disc.segments());
    let n_x = map.len();
    let n_nodes = net.node_count();
    let dt = disc.dt_s();
    let dt_h = dt / SECONDS_PER_HOUR;

    for (i, &qb) in hyd.booster_flows.iter().enumerate() {
        if qb > 0.0 && !boosters.has_booster(i) {
            return Err(Error::Model(format!(
                "booster flow given at '{}' but no booster is installed there",
                net.node_id(i)
            )));
        }
    }

    let mut a_rows: Vec<Row> = vec![Vec::new(); n_x];
    let mut b_rows: Vec<Row> = vec![Vec::new(); n_x];
    let mut cfl = vec![0.0; net.pipes.len()];

    // State index of the concentration leaving link `k` along the flow.
    let outlet = |k: usize| -> usize {
        match net.link_kind(k) {
            LinkKind::Pipe => {
                let r = map.pipe_range(k);
                if inc.is_flipped(k) {
                    r.start
                } else {
                    r.end - 1
                }
            }
            _ => map.connector(k),
        }
    };

    for component in dependence_order(net, &inc)? {
        match component {
            Component::Pipe(k) => {
                let pipe = &net.pipes[k];
                let v = inc.flow(k) / pipe.area_m2();
                let mut c = v * dt / disc.dx()[k];
                if c > 1.0 + CFL_SLACK {
                    return Err(Error::Model(format!(
                        "pipe '{}': CFL number {c:.6} exceeds 1 (period {period})",
                        pipe.id
                    )));
                }
                c = c.min(1.0);
                cfl[k] = c;
                let (under, mid, over) = lw_coefficients(c)?;
                let kp = pipe_reaction_constant(pipe.kb, pipe.kw, pipe.kf, pipe.diameter_m)?;
                let react = match opts.reaction {
                    ReactionFold::Scaled => kp * dt_h,
                    ReactionFold::PaperLiteral => kp,
                };
                let range = map.pipe_range(k);
                let n = range.len();
                let idx = |s: usize| {
                    if inc.is_flipped(k) {
                        range.end - 1 - s
                    } else {
                        range.start + s
                    }
                };
                let (up, down) = inc.ends(k);
                for s in 0..n {
                    let prev = if s == 0 { up } else { idx(s - 1) };
                    let next = if s + 1 == n { down } else { idx(s + 1) };
                    let row = vec![(prev, under), (idx(s), mid + react), (next, over)];
                    a_rows[idx(s)] = combine([(&row, 1.0)]);
                }
            }
            Component::Node(i) => match net.node_kind(i) {
                NodeKind::Reservoir => {
                    a_rows[i] = vec![(i, 1.0)];
                }
                NodeKind::Junction => {
                    let q_out: f64 = sel.outflow_links(i).iter().map(|&k| inc.flow(k)).sum();
                    let total = q_out + hyd.demands[i];
                    if !(total > 0.0) {
                        return Err(Error::Model(format!(
                            "junction '{}' has zero total outflow and demand (period {period})",
                            net.node_id(i)
                        )));
                    }
                    let inflows: Vec<(usize, f64)> = sel
                        .inflow_links(i)
                        .into_iter()
                        .map(|k| (outlet(k), inc.flow(k) / total))
                        .collect();
                    let a = combine(inflows.iter().map(|&(s, w)| (&a_rows[s], w)));
                    let self_gain: Row = if boosters.has_booster(i) {
                        vec![(i, hyd.booster_flows[i] / total)]
                    } else {
                        Vec::new()
                    };
                    let b = combine(
                        inflows
                            .iter()
                            .map(|&(s, w)| (&b_rows[s], w))
                            .chain([(&self_gain, 1.0)]),
                    );
                    a_rows[i] = a;
                    b_rows[i] = b;
                }
                NodeKind::Tank => {
                    let t = i - net.node_offset(NodeKind::Tank);
                    let volume = hyd.volumes[t];
                    let q_in: f64 = sel.inflow_links(i).iter().map(|&k| inc.flow(k)).sum();
                    let q_out: f64 = sel.outflow_links(i).iter().map(|&k| inc.flow(k)).sum();
                    let qb = if boosters.has_booster(i) {
                        hyd.booster_flows[i]
                    } else {
                        0.0
                    };
                    let remaining = volume - dt * q_out;
                    let next = volume + dt * (q_in - q_out + qb);
                    if !(remaining > 0.0) || !(next > 0.0) {
                        return Err(Error::Model(format!(
                            "tank '{}' empties within one step (period {period})",
                            net.node_id(i)
                        )));
                    }
                    let mut row: Row = vec![(i, remaining / next + dt_h * net.tanks[t].kb)];
                    for k in sel.inflow_links(i) {
                        row.push((outlet(k), dt * inc.flow(k) / next));
                    }
                    a_rows[i] = combine([(&row, 1.0)]);
                    if qb > 0.0 {
                        b_rows[i] = vec![(i, qb * dt / next)];
                    }
                }
            },
            Component::Connector(k) => {
                let up = inc.ends(k).0;
                let s = map.connector(k);
                a_rows[s] = a_rows[up].clone();
                b_rows[s] = b_rows[up].clone();
            }
        }
    }

    Ok(StateSpaceSystem {
        a: to_csr(a_rows, n_x),
        b: to_csr(b_rows, n_nodes),
        dt_s: dt,
        period,
        map,
        cfl,
    })
}

/// Assemble every period of a schedule with a common grid and time step.
pub fn assemble_schedule(
    net: &WaterNetwork,
    boosters: &BoosterLayout,
    profile: &HydraulicProfile,
    disc: &Discretization,
    opts: AssemblyOptions,
    exec: Execution,
) -> Result<Vec<StateSpaceSystem>> {
    let ids: Vec<usize> = (0..profile.len()).collect();
    par::try_map(exec, &ids, |&p| {
        assemble_system(net, boosters, profile.period(p), p, disc, opts)
    })
}

impl StateSpaceSystem {
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    /// `x' = A x + B u`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.n_x());
        self.step_into(x.as_slice(), u.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }

    /// Allocation-free [`Self::step`].
    pub fn step_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_x() || out.len() != self.n_x() {
            return Err(Error::Dimension {
                what: "state vector",
                expected: self.n_x(),
                found: if x.len() != self.n_x() { x.len() } else { out.len() },
            });
        }
        if u.len() != self.n_u() {
            return Err(Error::Dimension {
                what: "input vector",
                expected: self.n_u(),
                found: u.len(),
            });
        }
        out.fill(0.0);
        spmv_add(&self.a, x, out);
        spmv_add(&self.b, u, out);
        Ok(())
    }

    /// Largest number of nonzeros in any row of `A`.
    pub fn max_row_nnz(&self) -> usize {
        self.a.row_iter().map(|r| r.nnz()).max().unwrap_or(0)
    }
}
