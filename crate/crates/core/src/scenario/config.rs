use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::rbc::{Rule, RuleTable};
use super::uncertainty::UncertaintySpec;
use crate::error::{Error, Result};
use crate::mpc::BoundSet;

/// Time scales in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScales {
    /// `T_d`, total simulated time.
    pub duration_s: f64,
    /// `T_n`, demand perturbation period.
    pub demand_period_s: f64,
    /// `T_h`, hydraulic period.
    pub hydraulic_step_s: f64,
    /// `T_p`, prediction horizon.
    pub horizon_s: f64,
    /// Time between control moves; each move is held over the interval.
    #[serde(default = "default_interval")]
    pub control_interval_s: f64,
    /// Water-quality step. Derived from the CFL bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
}

fn default_interval() -> f64 {
    60.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    Mpc,
    Rbc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub kind: ControllerKind,
    /// Booster node ids.
    pub boosters: Vec<String>,
    /// Sensor entities: node, pump/valve, pipe (segment mean) or `pipe:k`.
    pub sensors: Vec<String>,
    /// Reference concentration (mg/L) applied to every sensor.
    pub y_ref: f64,
    /// Unit price ($/mg).
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "y_min")]
    pub y_min: f64,
    #[serde(default = "y_max")]
    pub y_max: f64,
    #[serde(default)]
    pub u_min: f64,
    /// Upper input bound; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    /// Use the bound-constrained QP.
    #[serde(default)]
    pub constrained: bool,
}

fn one() -> f64 {
    1.0
}
fn y_min() -> f64 {
    0.2
}
fn y_max() -> f64 {
    4.0
}

impl ControllerConfig {
    pub fn bounds(&self) -> BoundSet {
        BoundSet {
            y_min: self.y_min,
            y_max: self.y_max,
            u_min: self.u_min,
            u_max: self.u_max.unwrap_or(f64::INFINITY),
        }
    }
}

/// A closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: PathBuf,
    pub hydraulics: PathBuf,
    pub time: TimeScales,
    /// Segments per pipe.
    pub segments: usize,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub uncertainty: UncertaintySpec,
    /// Rule table for the rule-based controller, doses in mg/min.
    #[serde(default)]
    pub rules: Vec<Rule>,
    /// Entities entering the metrics and the rule-based deviation. Defaults
    /// to the sensors.
    #[serde(default)]
    pub monitored: Vec<String>,
    /// Entities written to the trajectory export. Defaults to sensors plus
    /// monitored entities.
    #[serde(default)]
    pub record: Vec<String>,
    /// Initial concentration everywhere except reservoirs (mg/L).
    #[serde(default)]
    pub initial: f64,
    #[serde(default)]
    pub seed: u64,
    /// Add `k^P` to the diagonal without the step-length factor.
    #[serde(default)]
    pub paper_literal_reaction: bool,
    /// Record wall-clock time per control step. Off by default so exports
    /// stay byte-identical across runs.
    #[serde(default)]
    pub timing: bool,
}

impl ScenarioConfig {
    /// Parse TOML or JSON (by extension) and resolve relative paths against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text)?,
            _ => Self::from_toml(&text)?,
        };
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        for p in [&mut self.network, &mut self.hydraulics] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn monitored(&self) -> Vec<String> {
        if self.monitored.is_empty() {
            self.controller.sensors.clone()
        } else {
            self.monitored.clone()
        }
    }

    pub fn recorded(&self) -> Vec<String> {
        if !self.record.is_empty() {
            return self.record.clone();
        }
        let mut out = self.controller.sensors.clone();
        for m in self.monitored() {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    pub fn rule_table(&self) -> Result<RuleTable> {
        RuleTable::new(self.rules.clone(), self.controller.y_ref)
    }

    /// Check the time-scale relations and value ranges that do not need the
    /// network.
    pub fn validate(&self) -> Result<()> {
        let t = &self.time;
        let positive = [
            ("duration_s", t.duration_s),
            ("demand_period_s", t.demand_period_s),
            ("hydraulic_step_s", t.hydraulic_step_s),
            ("horizon_s", t.horizon_s),
            ("control_interval_s", t.control_interval_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(dt) = t.dt_s {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt_s must be positive, got {dt}")));
            }
        }
        if !whole(t.duration_s, t.hydraulic_step_s) {
            return Err(Error::Config(
                "duration is not a whole number of hydraulic steps".into(),
            ));
        }
        if !whole(t.duration_s, t.horizon_s) {
            return Err(Error::Config("duration is not a whole number of horizons".into()));
        }
        if !whole(t.demand_period_s, t.hydraulic_step_s) {
            return Err(Error::Config(
                "demand period must be a whole number of hydraulic steps".into(),
            ));
        }
        if !whole(t.duration_s, t.control_interval_s) || t.control_interval_s > t.horizon_s {
            return Err(Error::Config(
                "control interval must divide the duration and not exceed the horizon".into(),
            ));
        }
        if self.segments == 0 {
            return Err(Error::Config("segments must be at least 1".into()));
        }
        if self.controller.boosters.is_empty() {
            return Err(Error::Config("at least one booster is required".into()));
        }
        if self.controller.sensors.is_empty() {
            return Err(Error::Config("at least one sensor is required".into()));
        }
        if !(self.controller.y_ref > 0.0) {
            return Err(Error::Config("y_ref must be positive".into()));
        }
        self.controller.bounds().validate()?;
        self.uncertainty.validate(t.duration_s)?;
        if self.controller.kind == ControllerKind::Rbc {
            self.rule_table()?;
        }
        Ok(())
    }
}

/// Whether `a` is a whole multiple of `b`.
pub(crate) fn whole(a: f64, b: f64) -> bool {
    let n = (a / b).round();
    n >= 1.0 && (n * b - a).abs() <= 1e-9 * a.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
network = "net.inp"
hydraulics = "hyd.csv"
segments = 10

[time]
duration_s = 7200
demand_period_s = 3600
hydraulic_step_s = 3600
horizon_s = 300

[controller]
boosters = ["J2"]
sensors = ["J2"]
y_ref = 2.0
"#;

    #[test]
    fn defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.time.control_interval_s, 60.0);
        assert_eq!(c.controller.kind, ControllerKind::Mpc);
        assert_eq!(c.controller.bounds(), BoundSet::default());
        assert_eq!(c.monitored(), vec!["J2".to_string()]);
        assert!(!c.timing);
        c.validate().unwrap();
    }

    #[test]
    fn json_matches_toml() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::from_json(&json).unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("bogus = 1\n{MINIMAL}");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn time_relations_checked() {
        let mut c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        c.time.horizon_s = 7000.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        c.time.demand_period_s = 5400.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_paths_resolved() {
        let mut c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        c.resolve_paths(Path::new("/data"));
        assert_eq!(c.network, PathBuf::from("/data/net.inp"));
    }
}
