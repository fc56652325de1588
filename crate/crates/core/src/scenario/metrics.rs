use serde::{Deserialize, Serialize};

use super::report::ControlRecord;

/// Objective terms accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// `Σ ½ (y_ref − y)ᵀ Q (y_ref − y)` over control steps.
    pub reference_deviation: f64,
    /// `Σ ½ Δuᵀ R Δu`.
    pub smoothness: f64,
    /// `λ Σ q^B u Δt` in dollars, `q^B` in L/min and `Δt` in minutes.
    pub chlorine_cost_usd: f64,
    pub total: f64,
    pub wall_ms_per_control_step: f64,
}

/// Scalar weights used when scoring a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    pub q: f64,
    pub r: f64,
    /// $/mg.
    pub lambda: f64,
    pub y_ref: f64,
    /// Length of one control step in minutes.
    pub interval_min: f64,
}

/// Score control steps `records[range]`. `u_before` is the input applied
/// just before the first of them.
pub fn compute_metrics_from(
    records: &[ControlRecord],
    u_before: &[f64],
    w: &MetricWeights,
) -> Metrics {
    let mut m = Metrics::default();
    let mut prev: Vec<f64> = u_before.to_vec();
    for rec in records {
        m.reference_deviation += 0.5
            * w.q
            * rec
                .monitored
                .iter()
                .map(|y| (w.y_ref - y).powi(2))
                .sum::<f64>();
        m.smoothness += 0.5
            * w.r
            * rec
                .u
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        m.chlorine_cost_usd += w.lambda * rec.mass_rate.iter().sum::<f64>() * w.interval_min;
        prev.clone_from(&rec.u);
    }
    m.total = m.reference_deviation + m.smoothness + m.chlorine_cost_usd;
    m
}

/// Score a whole run starting from zero input.
pub fn compute_metrics(records: &[ControlRecord], w: &MetricWeights) -> Metrics {
    let n_u = records.first().map_or(0, |r| r.u.len());
    compute_metrics_from(records, &vec![0.0; n_u], w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(y: f64, u: f64) -> ControlRecord {
        ControlRecord {
            time_s: 0.0,
            monitored: vec![y],
            u: vec![u],
            mass_rate: vec![u * 10.0],
        }
    }

    const W: MetricWeights = MetricWeights {
        q: 1.0,
        r: 1.0,
        lambda: 0.001,
        y_ref: 2.0,
        interval_min: 1.0,
    };

    #[test]
    fn on_reference_with_no_input() {
        let m = compute_metrics(&[rec(2.0, 0.0), rec(2.0, 0.0)], &W);
        assert_eq!(m, Metrics::default());
    }

    #[test]
    fn deviation_term() {
        let m = compute_metrics(&[rec(0.0, 0.0)], &W);
        assert_eq!(m.reference_deviation, 2.0);
    }

    #[test]
    fn additive_over_partition() {
        let recs: Vec<ControlRecord> = (0..10)
            .map(|i| rec(1.5 + 0.1 * i as f64, (i * i % 7) as f64))
            .collect();
        let whole = compute_metrics(&recs, &W);
        let head = compute_metrics(&recs[..4], &W);
        let tail = compute_metrics_from(&recs[4..], &recs[3].u, &W);
        assert!((whole.total - head.total - tail.total).abs() < 1e-12);
        assert!((whole.smoothness - head.smoothness - tail.smoothness).abs() < 1e-12);
    }
}
