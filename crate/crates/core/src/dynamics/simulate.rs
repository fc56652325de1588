use nalgebra::DVector;

use super::assembly::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::network::HydraulicProfile;

/// States recorded during a run. `states[i]` is the state at `times[i]`
/// seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    /// One sample per whole minute: the latest recorded state at or before
    /// each minute mark.
    pub fn per_minute(&self) -> Trajectory {
        let mut out = Trajectory::default();
        let Some(&end) = self.times.last() else {
            return out;
        };
        let mut i = 0;
        let minutes = (end / 60.0 + 1e-9).floor() as usize;
        for m in 0..=minutes {
            let mark = 60.0 * m as f64 + 1e-9;
            while i + 1 < self.times.len() && self.times[i + 1] <= mark {
                i += 1;
            }
            if self.times[i] <= mark {
                out.times.push(60.0 * m as f64);
                out.states.push(self.states[i].clone());
            }
        }
        out
    }

    /// Time series of one state index.
    pub fn series(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[index]).collect()
    }
}

/// Number of steps of `dt` in `duration`, which must be a whole number.
pub fn steps_in(duration_s: f64, dt_s: f64) -> Result<usize> {
    let n = (duration_s / dt_s).round();
    if n < 1.0 || (n * dt_s - duration_s).abs() > 1e-9 * duration_s.max(1.0) {
        return Err(Error::Model(format!(
            "period of {duration_s} s is not a whole number of {dt_s} s steps"
        )));
    }
    Ok(n as usize)
}

/// Open-loop run over a whole schedule, one system per hydraulic period.
///
/// `input(t)` gives the booster concentrations applied over the step starting
/// at `t` seconds. Every `record_every`-th state is kept, plus the last.
pub fn simulate(
    systems: &[StateSpaceSystem],
    profile: &HydraulicProfile,
    x0: &DVector<f64>,
    input: impl Fn(f64) -> DVector<f64>,
    record_every: usize,
) -> Result<Trajectory> {
    if systems.len() != profile.len() {
        return Err(Error::Model(format!(
            "schedule gap: {} systems for {} hydraulic periods",
            systems.len(),
            profile.len()
        )));
    }
    let record_every = record_every.max(1);
    let mut traj = Trajectory::default();
    let mut x = x0.clone();
    let mut next = x.clone();
    let mut t = 0.0;
    let mut k = 0usize;
    traj.times.push(t);
    traj.states.push(x.clone());
    let mut last_recorded = true;
    for (sys, period) in systems.iter().zip(profile.periods()) {
        let n = steps_in(period.duration_s, sys.dt_s)?;
        let start = t;
        for s in 0..n {
            let u = input(t);
            sys.step_into(x.as_slice(), u.as_slice(), next.as_mut_slice())
                .map_err(|e| e.at(t))?;
            std::mem::swap(&mut x, &mut next);
            k += 1;
            t = start + (s + 1) as f64 * sys.dt_s;
            last_recorded = k.is_multiple_of(record_every);
            if last_recorded {
                traj.times.push(t);
                traj.states.push(x.clone());
            }
        }
    }
    if !last_recorded {
        traj.times.push(t);
        traj.states.push(x);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(times: &[f64]) -> Trajectory {
        Trajectory {
            times: times.to_vec(),
            states: times.iter().map(|&t| DVector::from_element(1, t)).collect(),
        }
    }

    #[test]
    fn per_minute_picks_latest_before_mark() {
        let t = traj(&[0.0, 25.0, 50.0, 75.0, 100.0, 125.0]);
        let m = t.per_minute();
        assert_eq!(m.times, vec![0.0, 60.0, 120.0]);
        assert_eq!(m.series(0), vec![0.0, 50.0, 100.0]);
        assert!(Trajectory::default().per_minute().times.is_empty());
    }

    #[test]
    fn whole_steps() {
        assert_eq!(steps_in(3600.0, 6.0).unwrap(), 600);
        assert!(steps_in(3600.0, 7.0).is_err());
    }
}
