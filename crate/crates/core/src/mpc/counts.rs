use std::fmt;

use crate::network::WaterNetwork;

/// Size of the full-horizon program with a booster at every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableCount {
    /// `N_p (2 n_N + n_L)`: states and inputs of the linear program.
    pub lp: usize,
    /// `N_p n_N`: input increments of the condensed QP.
    pub qp: usize,
    /// `n_N + n_L`, numerator of the reduction.
    removed_per_step: usize,
    /// `2 n_N + n_L`.
    total_per_step: usize,
}

impl VariableCount {
    /// Fraction of variables removed, `(n_N + n_L) / (2 n_N + n_L)`.
    pub fn reduction(&self) -> f64 {
        self.removed_per_step as f64 / self.total_per_step as f64
    }

    /// Reduction in whole percent.
    pub fn reduction_percent(&self) -> u32 {
        (100.0 * self.reduction()).round() as u32
    }
}

impl fmt::Display for VariableCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LP {}, QP {}, reduction {}%",
            self.lp,
            self.qp,
            self.reduction_percent()
        )
    }
}

/// Variable counts from node count, link-state count `n_L` (pipe segments
/// plus pumps and valves) and horizon.
pub fn count_from_sizes(n_nodes: usize, n_link_states: usize, horizon: usize) -> VariableCount {
    VariableCount {
        lp: horizon * (2 * n_nodes + n_link_states),
        qp: horizon * n_nodes,
        removed_per_step: n_nodes + n_link_states,
        total_per_step: 2 * n_nodes + n_link_states,
    }
}

/// Counts for a network with `segments` per pipe.
pub fn count_variables(net: &WaterNetwork, segments: &[usize], horizon: usize) -> VariableCount {
    let n_l = segments.iter().sum::<usize>() + net.pumps.len() + net.valves.len();
    count_from_sizes(net.node_count(), n_l, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_formula() {
        let c = count_from_sizes(3, 101, 300);
        assert_eq!((c.lp, c.qp, c.reduction_percent()), (32_100, 900, 97));
        assert_eq!(c.to_string(), "LP 32100, QP 900, reduction 97%");
    }
}
