use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `if from ≤ deviation < to then dose`. The last rule also includes its
/// upper end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub from: f64,
    pub to: f64,
    /// Injected mass rate (mg/min).
    pub dose: f64,
}

/// Ordered, contiguous rules covering `[−y_ref, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    rules: Vec<Rule>,
    y_ref: f64,
}

impl RuleTable {
    pub fn new(mut rules: Vec<Rule>, y_ref: f64) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Config("rule table is empty".into()));
        }
        rules.sort_by(|a, b| a.from.total_cmp(&b.from));
        for r in &rules {
            if !(r.from < r.to) {
                return Err(Error::Config(format!(
                    "rule [{}, {}) is empty",
                    r.from, r.to
                )));
            }
            if !(r.dose >= 0.0) {
                return Err(Error::Config(format!("rule dose {} is negative", r.dose)));
            }
        }
        for w in rules.windows(2) {
            if w[0].to != w[1].from {
                return Err(Error::Config(format!(
                    "rules leave a gap or overlap between {} and {}",
                    w[0].to, w[1].from
                )));
            }
        }
        let (lo, hi) = (rules[0].from, rules[rules.len() - 1].to);
        if lo > -y_ref || hi < 0.0 {
            return Err(Error::Config(format!(
                "rules cover [{lo}, {hi}] but must cover [{}, 0]",
                -y_ref
            )));
        }
        Ok(RuleTable { rules, y_ref })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Dose for a deviation, clamped into `[−y_ref, 0]` first.
    pub fn dose(&self, deviation: f64) -> f64 {
        let d = deviation.clamp(-self.y_ref, 0.0);
        let last = self.rules.len() - 1;
        self.rules
            .iter()
            .enumerate()
            .find(|(i, r)| r.from <= d && (d < r.to || (*i == last && d <= r.to)))
            .map(|(_, r)| r.dose)
            .expect("table covers the clamped range")
    }
}

/// Mean error `value − y_ref` over the monitored entities, each entity value
/// already averaged over its states.
pub fn deviation(values: &[f64], y_ref: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| v - y_ref).sum::<f64>() / values.len() as f64
}

/// Rule-based dose for the monitored values, as a mass rate (mg/min).
pub fn rbc_control(table: &RuleTable, values: &[f64], y_ref: f64) -> f64 {
    table.dose(deviation(values, y_ref))
}
