use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ControllerKind;
use super::metrics::Metrics;
use crate::error::Result;

/// Recorded entity values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time_s: f64,
    pub values: Vec<f64>,
}

/// One control move.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRecord {
    pub time_s: f64,
    /// Monitored entity values measured before the move.
    pub monitored: Vec<f64>,
    /// Booster concentrations held over the interval (mg/L).
    pub u: Vec<f64>,
    /// Injected mass rates (mg/min).
    pub mass_rate: Vec<f64>,
}

/// Time for a monitored entity to settle back near the reference after a
/// disturbance event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub event_time_s: f64,
    pub entity: String,
    /// `None` when the entity never settled.
    pub recovery_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub controller: ControllerKind,
    pub dt_s: f64,
    pub horizon_steps: usize,
    pub recorded: Vec<String>,
    pub samples: Vec<Sample>,
    pub monitored: Vec<String>,
    pub boosters: Vec<String>,
    pub controls: Vec<ControlRecord>,
    pub metrics: Metrics,
    pub recovery: Vec<Recovery>,
    /// Moves where the QP needed relaxation or the closed-form fallback.
    pub fallbacks: usize,
}

impl ScenarioReport {
    /// Series of one recorded entity.
    pub fn series(&self, entity: &str) -> Option<Vec<(f64, f64)>> {
        let i = self.recorded.iter().position(|e| e == entity)?;
        Some(self.samples.iter().map(|s| (s.time_s, s.values[i])).collect())
    }
}

fn file_stem(entity: &str) -> String {
    entity
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Write `trajectories.csv`, `controls.csv`, `metrics.json`,
/// `recovery.csv` and one `plotseries/<name>.csv` per recorded entity and
/// booster.
pub fn export_report(report: &ScenarioReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("plotseries"))?;

    let mut traj = String::from("time_s,entity,value\n");
    for s in &report.samples {
        for (e, v) in report.recorded.iter().zip(&s.values) {
            writeln!(traj, "{},{e},{v}", s.time_s).unwrap();
        }
    }
    fs::write(dir.join("trajectories.csv"), traj)?;

    let mut ctl = String::from("time_s,booster,u_mg_per_l,mass_rate_mg_per_min\n");
    for c in &report.controls {
        for (b, (u, m)) in report.boosters.iter().zip(c.u.iter().zip(&c.mass_rate)) {
            writeln!(ctl, "{},{b},{u},{m}", c.time_s).unwrap();
        }
    }
    fs::write(dir.join("controls.csv"), ctl)?;

    let mut json = serde_json::to_string_pretty(&report.metrics)?;
    json.push('\n');
    fs::write(dir.join("metrics.json"), json)?;

    let mut rec = String::from("event_time_s,entity,recovery_s\n");
    for r in &report.recovery {
        let v = r.recovery_s.map(|v| v.to_string()).unwrap_or_default();
        writeln!(rec, "{},{},{v}", r.event_time_s, r.entity).unwrap();
    }
    fs::write(dir.join("recovery.csv"), rec)?;

    for (i, e) in report.recorded.iter().enumerate() {
        let mut out = String::from("minute,value\n");
        for s in &report.samples {
            writeln!(out, "{},{}", s.time_s / 60.0, s.values[i]).unwrap();
        }
        fs::write(dir.join("plotseries").join(format!("{}.csv", file_stem(e))), out)?;
    }
    for (j, b) in report.boosters.iter().enumerate() {
        let mut out = String::from("minute,u_mg_per_l,mass_rate_mg_per_min\n");
        for c in &report.controls {
            writeln!(out, "{},{},{}", c.time_s / 60.0, c.u[j], c.mass_rate[j]).unwrap();
        }
        fs::write(
            dir.join("plotseries").join(format!("u_{}.csv", file_stem(b))),
            out,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_writes_headers() {
        let report = ScenarioReport {
            controller: ControllerKind::Mpc,
            dt_s: 1.0,
            horizon_steps: 1,
            recorded: vec![],
            samples: vec![],
            monitored: vec![],
            boosters: vec![],
            controls: vec![],
            metrics: Metrics::default(),
            recovery: vec![],
            fallbacks: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        export_report(&report, dir.path()).unwrap();
        let t = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
        assert_eq!(t, "time_s,entity,value\n");
        let c = fs::read_to_string(dir.path().join("controls.csv")).unwrap();
        assert_eq!(c.lines().count(), 1);
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap())
                .unwrap();
        for key in [
            "reference_deviation",
            "smoothness",
            "chlorine_cost_usd",
            "total",
            "wall_ms_per_control_step",
        ] {
            assert!(m.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn segment_names_become_file_names() {
        assert_eq!(file_stem("P23:4"), "P23_4");
    }
}
