//! Hydraulic schedules: per-period flows, demands, tank volumes and booster
//! flow rates, read from `period,entity,kind,value` CSV (GPM and ft³) and
//! stored in SI units.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{NodeKind, WaterNetwork};
use crate::error::{Error, Result};
use crate::units::{ft3_to_m3, gpm_to_m3s, M3S_PER_GPM, M3_PER_FT3};

/// Relative tolerance on the junction balance residual.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// One hydraulic period, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicPeriod {
    pub duration_s: f64,
    /// Signed link flows (m³/s), positive along the declared direction.
    pub flows: Vec<f64>,
    /// Junction demands (m³/s).
    pub demands: Vec<f64>,
    /// Tank volumes at the period start (m³).
    pub volumes: Vec<f64>,
    /// Booster flow rate per node (m³/s).
    pub booster_flows: Vec<f64>,
}

impl HydraulicPeriod {
    /// Flow into node `i` minus flow out of it, counting booster injection as
    /// inflow and demand as outflow.
    pub fn node_residuals(&self, net: &WaterNetwork) -> Vec<f64> {
        let mut r = self.booster_flows.clone();
        for (k, &q) in self.flows.iter().enumerate() {
            let (up, down) = net.link_ends(k);
            r[up] -= q;
            r[down] += q;
        }
        for (j, d) in self.demands.iter().enumerate() {
            r[j] -= d;
        }
        r
    }

    /// Total flow passing through node `i` (max of in and out), used to scale
    /// residuals.
    fn node_throughput(&self, net: &WaterNetwork) -> Vec<f64> {
        let mut inflow = self.booster_flows.clone();
        let mut outflow = vec![0.0; net.node_count()];
        for (j, d) in self.demands.iter().enumerate() {
            outflow[j] += d;
        }
        for (k, &q) in self.flows.iter().enumerate() {
            let (up, down) = net.link_ends(k);
            if q >= 0.0 {
                outflow[up] += q;
                inflow[down] += q;
            } else {
                outflow[down] -= q;
                inflow[up] -= q;
            }
        }
        inflow
            .iter()
            .zip(&outflow)
            .map(|(a, b)| a.max(*b))
            .collect()
    }

    fn check(&self, net: &WaterNetwork, index: usize) -> Result<()> {
        let c = net.counts();
        for (what, got, want) in [
            ("flow", self.flows.len(), c.links()),
            ("demand", self.demands.len(), c.junctions),
            ("volume", self.volumes.len(), c.tanks),
            ("booster_flow", self.booster_flows.len(), c.nodes()),
        ] {
            if got != want {
                return Err(Error::Hydraulics(format!(
                    "period {index}: {want} {what} values expected, got {got}"
                )));
            }
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Hydraulics(format!(
                "period {index}: duration must be positive"
            )));
        }
        let all = self
            .flows
            .iter()
            .chain(&self.demands)
            .chain(&self.volumes)
            .chain(&self.booster_flows);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Hydraulics(format!(
                "period {index}: non-finite value"
            )));
        }
        for (j, &d) in self.demands.iter().enumerate() {
            if d < 0.0 {
                return Err(Error::Hydraulics(format!(
                    "period {index}: negative demand at '{}'",
                    net.junctions[j].id
                )));
            }
        }
        for (t, &v) in self.volumes.iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::Hydraulics(format!(
                    "period {index}: empty tank unsupported ('{}' volume {v})",
                    net.tanks[t].id
                )));
            }
        }
        for (n, &q) in self.booster_flows.iter().enumerate() {
            if q < 0.0 {
                return Err(Error::Hydraulics(format!(
                    "period {index}: negative booster flow at '{}'",
                    net.node_id(n)
                )));
            }
        }
        Ok(())
    }
}

/// A validated sequence of hydraulic periods.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicProfile {
    periods: Vec<HydraulicPeriod>,
    residuals: Vec<Vec<f64>>,
    consistent: bool,
}

impl HydraulicProfile {
    /// Validate periods already in SI units.
    pub fn from_periods(net: &WaterNetwork, periods: Vec<HydraulicPeriod>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::Hydraulics("no hydraulic periods".into()));
        }
        let mut residuals = Vec::with_capacity(periods.len());
        let mut consistent = true;
        for (i, p) in periods.iter().enumerate() {
            p.check(net, i)?;
            let res = p.node_residuals(net);
            let scale = p.node_throughput(net);
            let junction_res: Vec<f64> = net
                .node_range(NodeKind::Junction)
                .map(|j| res[j])
                .collect();
            for (j, r) in junction_res.iter().enumerate() {
                if r.abs() > BALANCE_TOLERANCE * scale[j].max(f64::MIN_POSITIVE) {
                    if consistent {
                        log::warn!(
                            "period {i}: junction '{}' out of balance by {r:e} m3/s",
                            net.junctions[j].id
                        );
                    }
                    consistent = false;
                }
            }
            residuals.push(junction_res);
        }
        Ok(HydraulicProfile {
            periods,
            residuals,
            consistent,
        })
    }

    /// Read the `period,entity,kind,value` table. Every period must give a
    /// flow for each link, a demand for each junction and a volume for each
    /// tank; booster flows default to zero.
    pub fn from_csv(net: &WaterNetwork, text: &str, period_s: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            period: i64,
            entity: String,
            kind: String,
            value: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        for col in ["period", "entity", "kind", "value"] {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::Hydraulics(format!("missing column '{col}'")));
            }
        }
        let c = net.counts();
        let blank = || HydraulicPeriod {
            duration_s: period_s,
            flows: vec![f64::NAN; c.links()],
            demands: vec![f64::NAN; c.junctions],
            volumes: vec![f64::NAN; c.tanks],
            booster_flows: vec![0.0; c.nodes()],
        };
        let mut by_period: BTreeMap<i64, HydraulicPeriod> = BTreeMap::new();
        for (n, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            let line = n + 2;
            let p = by_period.entry(row.period).or_insert_with(blank);
            let bad = |msg: String| Error::Hydraulics(format!("row {line}: {msg}"));
            match row.kind.as_str() {
                "flow" => {
                    let k = net
                        .link_position(&row.entity)
                        .ok_or_else(|| bad(format!("unknown link '{}'", row.entity)))?;
                    p.flows[k] = gpm_to_m3s(row.value);
                }
                "demand" => match net.node_position(&row.entity) {
                    Some(j) if net.node_kind(j) == NodeKind::Junction => {
                        p.demands[j] = gpm_to_m3s(row.value)
                    }
                    _ => return Err(bad(format!("'{}' is not a junction", row.entity))),
                },
                "volume" => match net.node_position(&row.entity) {
                    Some(t) if net.node_kind(t) == NodeKind::Tank => {
                        p.volumes[t - net.node_offset(NodeKind::Tank)] = ft3_to_m3(row.value)
                    }
                    _ => return Err(bad(format!("'{}' is not a tank", row.entity))),
                },
                "booster_flow" => {
                    let i = net
                        .node_position(&row.entity)
                        .ok_or_else(|| bad(format!("unknown node '{}'", row.entity)))?;
                    p.booster_flows[i] = gpm_to_m3s(row.value);
                }
                other => return Err(bad(format!("unknown kind '{other}'"))),
            }
        }
        let keys: Vec<i64> = by_period.keys().copied().collect();
        if let (Some(&first), Some(&last)) = (keys.first(), keys.last()) {
            if (last - first) as usize + 1 != keys.len() {
                return Err(Error::Hydraulics("period numbers are not contiguous".into()));
            }
        }
        for (&id, p) in &by_period {
            let missing = |what: &str, who: &str| {
                Error::Hydraulics(format!("period {id}: missing {what} for '{who}'"))
            };
            if let Some(k) = p.flows.iter().position(|v| v.is_nan()) {
                return Err(missing("flow", net.link_id(k)));
            }
            if let Some(j) = p.demands.iter().position(|v| v.is_nan()) {
                return Err(missing("demand", &net.junctions[j].id));
            }
            if let Some(t) = p.volumes.iter().position(|v| v.is_nan()) {
                return Err(missing("volume", &net.tanks[t].id));
            }
        }
        Self::from_periods(net, by_period.into_values().collect())
    }

    /// Write back in the CSV grammar (GPM, ft³), periods numbered from 0.
    pub fn to_csv(&self, net: &WaterNetwork) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["period", "entity", "kind", "value"]);
        for (i, p) in self.periods.iter().enumerate() {
            let i = i.to_string();
            for (k, q) in p.flows.iter().enumerate() {
                let v = (q / M3S_PER_GPM).to_string();
                let _ = w.write_record([i.as_str(), net.link_id(k), "flow", &v]);
            }
            for (j, d) in p.demands.iter().enumerate() {
                let v = (d / M3S_PER_GPM).to_string();
                let _ = w.write_record([i.as_str(), &net.junctions[j].id, "demand", &v]);
            }
            for (t, vol) in p.volumes.iter().enumerate() {
                let v = (vol / M3_PER_FT3).to_string();
                let _ = w.write_record([i.as_str(), &net.tanks[t].id, "volume", &v]);
            }
            for (n, q) in p.booster_flows.iter().enumerate() {
                if *q != 0.0 {
                    let v = (q / M3S_PER_GPM).to_string();
                    let _ = w.write_record([i.as_str(), net.node_id(n), "booster_flow", &v]);
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }

    pub fn periods(&self) -> &[HydraulicPeriod] {
        &self.periods
    }

    pub fn period(&self, i: usize) -> &HydraulicPeriod {
        &self.periods[i]
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Whether every junction balances within [`BALANCE_TOLERANCE`].
    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// Junction balance residuals per period (m³/s).
    pub fn residuals(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    /// Sum of period durations.
    pub fn total_duration_s(&self) -> f64 {
        self.periods.iter().map(|p| p.duration_s).sum()
    }

    /// Index of the period containing time `t` (seconds from start). Times
    /// past the end map to the last period.
    pub fn period_at(&self, t: f64) -> usize {
        let mut end = 0.0;
        for (i, p) in self.periods.iter().enumerate() {
            end += p.duration_s;
            if t < end {
                return i;
            }
        }
        self.periods.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn chain() -> WaterNetwork {
        parse_network(
            "[JUNCTIONS]\nJ1\nJ2\n[RESERVOIRS]\nR 1\n[TANKS]\nT\n\
             [PIPES]\nP1 J1 J2 10 0.1 0 0 0\nP2 J2 T 10 0.1 0 0 0\n[PUMPS]\nM R J1\n",
        )
        .unwrap()
    }

    fn csv_for(periods: usize, demand_j2: f64, volume: f64) -> String {
        let mut s = String::from("period,entity,kind,value\n");
        for p in 0..periods {
            s += &format!(
                "{p},M,flow,1\n{p},P1,flow,1\n{p},P2,flow,{}\n{p},J1,demand,0\n\
                 {p},J2,demand,{demand_j2}\n{p},T,volume,{volume}\n",
                1.0 - demand_j2
            );
        }
        s
    }

    #[test]
    fn consistent_profile_has_zero_residuals() {
        let net = chain();
        let h = HydraulicProfile::from_csv(&net, &csv_for(1, 0.0, 100.0), 3600.0).unwrap();
        assert!(h.is_consistent());
        assert!(h.residuals()[0].iter().all(|r| *r == 0.0));
        assert_eq!(h.period(0).flows[0], gpm_to_m3s(1.0));
        assert_eq!(h.period(0).volumes[0], ft3_to_m3(100.0));
    }

    #[test]
    fn day_of_hourly_periods() {
        let net = chain();
        let h = HydraulicProfile::from_csv(&net, &csv_for(24, 0.25, 50.0), 3600.0).unwrap();
        assert_eq!(h.len(), 24);
        assert_eq!(h.total_duration_s(), 24.0 * 3600.0);
        assert_eq!(h.period_at(3600.0 * 5.5), 5);
        assert_eq!(h.period_at(1e9), 23);
    }

    #[test]
    fn empty_tank_rejected() {
        let net = chain();
        let err = HydraulicProfile::from_csv(&net, &csv_for(1, 0.0, 0.0), 3600.0).unwrap_err();
        assert!(err.to_string().contains("empty tank unsupported"), "{err}");
    }

    #[test]
    fn imbalance_is_flagged_not_fatal() {
        let net = chain();
        let text = csv_for(1, 0.0, 10.0).replace("0,P2,flow,1", "0,P2,flow,0.5");
        let h = HydraulicProfile::from_csv(&net, &text, 3600.0).unwrap();
        assert!(!h.is_consistent());
        let r = &h.residuals()[0];
        assert!((r[1] - gpm_to_m3s(0.5)).abs() < 1e-15);
    }

    #[test]
    fn missing_entries_and_columns() {
        let net = chain();
        let text = csv_for(1, 0.0, 10.0).replace("0,P2,flow,1\n", "");
        assert!(HydraulicProfile::from_csv(&net, &text, 3600.0)
            .unwrap_err()
            .to_string()
            .contains("missing flow for 'P2'"));
        let err = HydraulicProfile::from_csv(&net, "period,entity,value\n", 3600.0).unwrap_err();
        assert!(err.to_string().contains("missing column 'kind'"));
        let bad = csv_for(1, 0.0, 10.0) + "0,T,demand,1\n";
        assert!(HydraulicProfile::from_csv(&net, &bad, 3600.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let net = chain();
        let text = csv_for(2, 0.25, 40.0) + "1,J2,booster_flow,0.5\n";
        let text = text.replace("1,P2,flow,0.75", "1,P2,flow,1.25");
        let h = HydraulicProfile::from_csv(&net, &text, 1800.0).unwrap();
        let back = HydraulicProfile::from_csv(&net, &h.to_csv(&net), 1800.0).unwrap();
        for (a, b) in h.periods().iter().zip(back.periods()) {
            for (x, y) in a.flows.iter().zip(&b.flows) {
                assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-12));
            }
            assert_eq!(a.booster_flows.len(), b.booster_flows.len());
        }
        assert!(h.is_consistent());
    }
}
