use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::augmented::{AugmentedSystem, OutputMap};
use super::constraints::{bound_constraints, BoundSet, Inequalities};
use super::lumping::lump_schedule;
use super::prediction::PredictionOperator;
use super::qp::{DualActiveSet, QpSolver};
use super::weights::CostWeights;
use crate::dynamics::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::units::m3s_to_lpm;

/// Horizon problem of one hydraulic period: prediction operator, weights and
/// the factored Hessian `H = ZᵀQZ + R`, built once and reused for every
/// control step inside the period.
#[derive(Debug, Clone)]
pub struct HorizonProblem {
    pub pred: PredictionOperator,
    pub weights: CostWeights,
    hessian: Cholesky<f64, Dyn>,
    /// `ZᵀQ`.
    ztq: DMatrix<f64>,
}

impl HorizonProblem {
    pub fn new(pred: PredictionOperator, weights: CostWeights) -> Result<Self> {
        weights.validate()?;
        let (rows, cols) = pred.z.shape();
        if weights.q.len() != rows || weights.r.len() != cols {
            return Err(Error::Dimension {
                what: "weight vector",
                expected: rows,
                found: weights.q.len(),
            });
        }
        let mut ztq = pred.z.transpose();
        for (j, mut c) in ztq.column_iter_mut().enumerate() {
            c *= weights.q[j];
        }
        let mut h = &ztq * &pred.z;
        for i in 0..cols {
            h[(i, i)] += weights.r[i];
        }
        let hessian = h
            .cholesky()
            .ok_or_else(|| Error::Solver("ZᵀQZ + R is not positive definite".into()))?;
        Ok(HorizonProblem {
            pred,
            weights,
            hessian,
            ztq,
        })
    }

    pub fn hessian(&self) -> &Cholesky<f64, Dyn> {
        &self.hessian
    }

    /// Linear term `f = b + ZᵀQ(Wx_a − r)` for a free response `wx`.
    pub fn linear_term(&self, wx: &DVector<f64>) -> DVector<f64> {
        &self.weights.b + &self.ztq * (wx - &self.weights.y_ref)
    }

    /// Horizon objective `½(y−r)ᵀQ(y−r) + ½ΔuᵀRΔu + bᵀΔu`.
    pub fn objective(&self, wx: &DVector<f64>, du: &DVector<f64>) -> f64 {
        let e = wx + &self.pred.z * du - &self.weights.y_ref;
        0.5 * e.component_mul(&e).dot(&self.weights.q)
            + 0.5 * du.component_mul(du).dot(&self.weights.r)
            + self.weights.b.dot(du)
    }

    /// Unconstrained minimizer `Δu_p = −H⁻¹(b + ZᵀQ(Wx_a − r))`.
    pub fn analytical_control(&self, dx: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        let wx = self.pred.free_response(dx, y)?;
        Ok(-self.hessian.solve(&self.linear_term(&wx)))
    }

    /// Minimizer of the same objective subject to `ineqs`.
    pub fn solve_constrained(
        &self,
        dx: &[f64],
        y: &[f64],
        ineqs: &Inequalities,
        solver: &dyn QpSolver,
    ) -> Result<DVector<f64>> {
        let wx = self.pred.free_response(dx, y)?;
        Ok(solver.solve(&self.hessian, &self.linear_term(&wx), ineqs)?.x)
    }
}

/// Controller settings shared by every period.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSettings {
    /// `N_p` in water-quality steps.
    pub horizon: usize,
    pub q: f64,
    pub r: f64,
    /// Unit price in $/mg.
    pub lambda: f64,
    /// Reference per sensor (mg/L).
    pub y_ref: Vec<f64>,
    pub bounds: BoundSet,
    /// Solve the bound-constrained QP instead of the closed-form law.
    pub constrained: bool,
}

/// Build the horizon problem for one period. `booster_flows` are the flow
/// rates (m³/s) of the input columns.
pub fn horizon_problem(
    sys: &StateSpaceSystem,
    sensors: &OutputMap,
    inputs: &[usize],
    booster_flows: &[f64],
    settings: &ControllerSettings,
    exec: Execution,
) -> Result<HorizonProblem> {
    let aug = AugmentedSystem::new(sys, sensors.clone(), inputs)?;
    if settings.y_ref.len() != aug.n_y() {
        return Err(Error::Dimension {
            what: "reference vector",
            expected: aug.n_y(),
            found: settings.y_ref.len(),
        });
    }
    let pred = PredictionOperator::build(&aug, settings.horizon, exec)?;
    let lpm: Vec<f64> = booster_flows.iter().map(|&q| m3s_to_lpm(q)).collect();
    let weights = CostWeights::uniform(
        settings.horizon,
        settings.q,
        settings.r,
        settings.lambda,
        &lpm,
        &settings.y_ref,
    )?;
    HorizonProblem::new(pred, weights)
}

/// How a control move was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Analytical,
    Constrained,
    /// Output lower bounds dropped after the full system was infeasible.
    Relaxed,
    /// Closed-form law plus clipping after every QP attempt failed.
    Fallback,
}

/// Receding-horizon controller: holds the last applied input and the
/// factored problem of the current period.
#[derive(Debug)]
pub struct MpcController {
    settings: ControllerSettings,
    solver: Box<dyn QpSolver>,
    cached: Option<(usize, HorizonProblem)>,
    u_prev: DVector<f64>,
    rebuilds: usize,
}

impl MpcController {
    pub fn new(settings: ControllerSettings, n_u: usize) -> Result<Self> {
        settings.bounds.validate()?;
        if settings.horizon == 0 {
            return Err(Error::Config("prediction horizon must be at least 1".into()));
        }
        Ok(MpcController {
            settings,
            solver: Box::new(DualActiveSet::default()),
            cached: None,
            u_prev: DVector::zeros(n_u),
            rebuilds: 0,
        })
    }

    pub fn with_solver(mut self, solver: Box<dyn QpSolver>) -> Self {
        self.solver = solver;
        self
    }

    pub fn settings(&self) -> &ControllerSettings {
        &self.settings
    }

    /// `u(t−1)`.
    pub fn last_input(&self) -> &DVector<f64> {
        &self.u_prev
    }

    /// Number of factorizations built so far.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Problem for `period`, rebuilt only when the period changes.
    pub fn problem_for(
        &mut self,
        period: usize,
        build: impl FnOnce(&ControllerSettings) -> Result<HorizonProblem>,
    ) -> Result<&HorizonProblem> {
        if self.cached.as_ref().is_none_or(|(p, _)| *p != period) {
            let problem = build(&self.settings)?;
            if problem.pred.n_u() != self.u_prev.len() {
                return Err(Error::Dimension {
                    what: "controller inputs",
                    expected: self.u_prev.len(),
                    found: problem.pred.n_u(),
                });
            }
            self.cached = Some((period, problem));
            self.rebuilds += 1;
        }
        Ok(&self.cached.as_ref().expect("just cached").1)
    }

    /// Plan over the horizon from `x_a = [dx; y]`.
    pub fn plan(&self, problem: &HorizonProblem, dx: &[f64], y: &[f64]) -> Result<(DVector<f64>, SolveMode)> {
        if y.len() != problem.pred.n_y() {
            return Err(Error::Dimension {
                what: "measurement vector",
                expected: problem.pred.n_y(),
                found: y.len(),
            });
        }
        if !self.settings.constrained {
            return Ok((problem.analytical_control(dx, y)?, SolveMode::Analytical));
        }
        let wx = problem.pred.free_response(dx, y)?;
        let f = problem.linear_term(&wx);
        let ineqs = bound_constraints(&problem.pred.z, &wx, &self.u_prev, &self.settings.bounds)?;
        match self.solver.solve(problem.hessian(), &f, &ineqs) {
            Ok(s) => return Ok((s.x, SolveMode::Constrained)),
            Err(Error::Infeasible) => {}
            Err(e) => return Err(e),
        }
        let relaxed = BoundSet {
            y_min: f64::NEG_INFINITY,
            ..self.settings.bounds.clone()
        };
        let ineqs = bound_constraints(&problem.pred.z, &wx, &self.u_prev, &relaxed)?;
        match self.solver.solve(problem.hessian(), &f, &ineqs) {
            Ok(s) => {
                log::debug!("output lower bounds unreachable; solved without them");
                Ok((s.x, SolveMode::Relaxed))
            }
            Err(Error::Infeasible) => {
                log::warn!("QP infeasible; using the unconstrained law with clipping");
                Ok((-problem.hessian().solve(&f), SolveMode::Fallback))
            }
            Err(e) => Err(e),
        }
    }

    /// One receding-horizon move. The first `hold` planned inputs are lumped
    /// into their average, clipped to the input bounds, stored as `u(t)` and
    /// returned.
    pub fn receding_step(
        &mut self,
        problem: &HorizonProblem,
        dx: &[f64],
        y: &[f64],
        hold: usize,
    ) -> Result<(DVector<f64>, SolveMode)> {
        let (du, mode) = self.plan(problem, dx, y)?;
        let n_u = self.u_prev.len();
        let hold = hold.clamp(1, problem.pred.horizon);
        let mut u = self.u_prev.clone();
        let mut planned = Vec::with_capacity(hold);
        for k in 0..hold {
            u += du.rows(k * n_u, n_u);
            planned.push(u.clone());
        }
        let lumped = lump_schedule(&planned, hold)?;
        let b = &self.settings.bounds;
        let u = lumped[0].map(|v| v.clamp(b.u_min, b.u_max));
        self.u_prev = u.clone();
        Ok((u, mode))
    }

    /// [`Self::receding_step`] on the cached problem of `period`, building
    /// it first when the period changed.
    pub fn advance(
        &mut self,
        period: usize,
        build: impl FnOnce(&ControllerSettings) -> Result<HorizonProblem>,
        dx: &[f64],
        y: &[f64],
        hold: usize,
    ) -> Result<(DVector<f64>, SolveMode)> {
        self.problem_for(period, build)?;
        let (p, problem) = self.cached.take().expect("problem cached");
        let out = self.receding_step(&problem, dx, y, hold);
        self.cached = Some((p, problem));
        out
    }

    pub fn reset(&mut self) {
        self.u_prev.fill(0.0);
    }
}
