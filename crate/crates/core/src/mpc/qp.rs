//! Strictly convex QP `min ½xᵀHx + fᵀx  s.t.  Gx ≤ h`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::constraints::Inequalities;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per inequality, zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// A convex QP method. `h` is the Cholesky factor of the Hessian.
pub trait QpSolver: std::fmt::Debug + Send + Sync {
    fn solve(
        &self,
        h: &Cholesky<f64, Dyn>,
        f: &DVector<f64>,
        cons: &Inequalities,
    ) -> Result<QpSolution>;
}

/// Dual active-set method of Goldfarb and Idnani: start from the
/// unconstrained minimizer and add the most violated constraint until the
/// iterate is feasible, dropping constraints whose multiplier would turn
/// negative. Every iterate is dual feasible.
#[derive(Debug, Clone)]
pub struct DualActiveSet {
    /// Relative feasibility tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DualActiveSet {
    fn default() -> Self {
        DualActiveSet {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl QpSolver for DualActiveSet {
    fn solve(
        &self,
        h: &Cholesky<f64, Dyn>,
        f: &DVector<f64>,
        cons: &Inequalities,
    ) -> Result<QpSolution> {
        let n = f.len();
        let m = cons.len();
        if cons.g.ncols() != n && m > 0 {
            return Err(Error::Dimension {
                what: "constraint matrix columns",
                expected: n,
                found: cons.g.ncols(),
            });
        }
        for i in 0..m {
            if cons.g.row(i).amax() == 0.0 && cons.h[i] < -self.tol {
                return Err(Error::Infeasible);
            }
        }
        let mut x = -h.solve(f);
        let mut lambda = DVector::zeros(m);
        let mut active: Vec<usize> = Vec::new();
        let mut hinv_g: Vec<DVector<f64>> = Vec::new();
        // Gram matrix of the active rows in the H⁻¹ metric.
        let mut gram = DMatrix::<f64>::zeros(0, 0);
        let rows: Vec<DVector<f64>> = (0..m).map(|i| cons.g.row(i).transpose()).collect();
        let norms: Vec<f64> = rows.iter().map(|g| g.norm()).collect();
        let mut iterations = 0;

        loop {
            // Most violated constraint, scaled by its row norm.
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                if norms[i] == 0.0 || active.contains(&i) {
                    continue;
                }
                let s = rows[i].dot(&x) - cons.h[i];
                let scaled = s / norms[i];
                if s > self.tol * (1.0 + cons.h[i].abs())
                    && pick.is_none_or(|(_, best)| scaled > best)
                {
                    pick = Some((i, scaled));
                }
            }
            let Some((p, _)) = pick else {
                break;
            };
            let hinv_gp = h.solve(&rows[p]);
            let mut lambda_p = 0.0;
            loop {
                iterations += 1;
                if iterations > self.max_iter {
                    return Err(Error::Solver(format!(
                        "active-set method did not converge in {} iterations",
                        self.max_iter
                    )));
                }
                let q = active.len();
                let r = if q == 0 {
                    DVector::zeros(0)
                } else {
                    let rhs = DVector::from_fn(q, |a, _| rows[active[a]].dot(&hinv_gp));
                    match gram.clone().cholesky() {
                        Some(c) => c.solve(&rhs),
                        None => gram.clone().lu().solve(&rhs).ok_or_else(|| {
                            Error::Solver("degenerate active set".into())
                        })?,
                    }
                };
                let mut z = hinv_gp.clone();
                for (a, hg) in hinv_g.iter().enumerate() {
                    z.axpy(-r[a], hg, 1.0);
                }
                let curvature = rows[p].dot(&z);
                let s = rows[p].dot(&x) - cons.h[p];
                let full = if curvature > 1e-14 * norms[p] * norms[p] * z.norm().max(1.0) {
                    s / curvature
                } else {
                    f64::INFINITY
                };
                let mut partial = f64::INFINITY;
                let mut drop = None;
                for a in 0..q {
                    if r[a] > 0.0 {
                        let t = lambda[active[a]] / r[a];
                        if t < partial {
                            partial = t;
                            drop = Some(a);
                        }
                    }
                }
                let t = full.min(partial);
                if !t.is_finite() {
                    return Err(Error::Infeasible);
                }
                if full.is_finite() {
                    x.axpy(-t, &z, 1.0);
                }
                for a in 0..q {
                    lambda[active[a]] -= t * r[a];
                }
                lambda_p += t;
                if t == full {
                    lambda[p] = lambda_p;
                    let q = active.len();
                    gram = gram.resize(q + 1, q + 1, 0.0);
                    for a in 0..q {
                        let v = rows[active[a]].dot(&hinv_gp);
                        gram[(a, q)] = v;
                        gram[(q, a)] = v;
                    }
                    gram[(q, q)] = rows[p].dot(&hinv_gp);
                    active.push(p);
                    hinv_g.push(hinv_gp);
                    break;
                }
                let k = drop.expect("partial step has a blocking constraint");
                lambda[active[k]] = 0.0;
                active.remove(k);
                hinv_g.remove(k);
                gram = gram.remove_row(k).remove_column(k);
            }
        }
        Ok(QpSolution {
            x,
            multipliers: lambda,
            active,
            iterations,
        })
    }
}
