use nalgebra::{DMatrix, DVector};

use super::augmented::AugmentedSystem;
use crate::dynamics::spmv_add;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Stacked prediction `y_p = W x_a + Z Δu_p` over `N_p` steps.
///
/// `Z` is block lower-triangular Toeplitz with block `(i, j) = S_{i-j}` where
/// `S_k = C (I + A + … + A^k) B`. `W x_a` is evaluated by a free-response
/// rollout, so `W` itself is only formed on request.
#[derive(Debug, Clone)]
pub struct PredictionOperator {
    pub horizon: usize,
    /// `S_0 … S_{N_p-1}`, each `n_y × n_u`.
    pub markov: Vec<DMatrix<f64>>,
    pub z: DMatrix<f64>,
    aug: AugmentedSystem,
}

impl PredictionOperator {
    pub fn build(aug: &AugmentedSystem, horizon: usize, exec: Execution) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("prediction horizon must be at least 1".into()));
        }
        let (n_x, n_y, n_u) = (aug.n_x(), aug.n_y(), aug.n_u());
        // Column j of every S_k, from one impulse response per input.
        let bt = aug.b.transpose();
        let columns: Vec<Vec<DVector<f64>>> = par::map_range(exec, n_u, |j| {
            let mut v = vec![0.0; n_x];
            let row = bt.row(j);
            for (&i, &val) in row.col_indices().iter().zip(row.values()) {
                v[i] = val;
            }
            let mut acc = v.clone();
            let mut next = vec![0.0; n_x];
            let mut out = Vec::with_capacity(horizon);
            out.push(aug.c.apply(&acc));
            for _ in 1..horizon {
                next.fill(0.0);
                spmv_add(&aug.a, &v, &mut next);
                std::mem::swap(&mut v, &mut next);
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a += x;
                }
                out.push(aug.c.apply(&acc));
            }
            out
        });
        let mut markov = vec![DMatrix::zeros(n_y, n_u); horizon];
        for (j, col) in columns.iter().enumerate() {
            for (k, s) in col.iter().enumerate() {
                markov[k].set_column(j, s);
            }
        }
        let mut z = DMatrix::zeros(n_y * horizon, n_u * horizon);
        for i in 0..horizon {
            for j in 0..=i {
                z.view_mut((i * n_y, j * n_u), (n_y, n_u))
                    .copy_from(&markov[i - j]);
            }
        }
        Ok(PredictionOperator {
            horizon,
            markov,
            z,
            aug: aug.clone(),
        })
    }

    pub fn n_y(&self) -> usize {
        self.aug.n_y()
    }

    pub fn n_u(&self) -> usize {
        self.aug.n_u()
    }

    pub fn augmented(&self) -> &AugmentedSystem {
        &self.aug
    }

    /// `W x_a` for `x_a = [Δx; y]`.
    pub fn free_response(&self, dx: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        let (n_x, n_y) = (self.aug.n_x(), self.n_y());
        if dx.len() != n_x {
            return Err(Error::Dimension {
                what: "state increment",
                expected: n_x,
                found: dx.len(),
            });
        }
        if y.len() != n_y {
            return Err(Error::Dimension {
                what: "measurement vector",
                expected: n_y,
                found: y.len(),
            });
        }
        let mut out = DVector::zeros(n_y * self.horizon);
        let mut d = dx.to_vec();
        let mut next = vec![0.0; n_x];
        let mut acc = DVector::from_column_slice(y);
        for i in 0..self.horizon {
            next.fill(0.0);
            spmv_add(&self.aug.a, &d, &mut next);
            std::mem::swap(&mut d, &mut next);
            acc += self.aug.c.apply(&d);
            out.rows_mut(i * n_y, n_y).copy_from(&acc);
        }
        Ok(out)
    }

    /// Dense `W` with rows `C_a Φ_a^i`, `i = 1 … N_p`.
    pub fn w_dense(&self) -> DMatrix<f64> {
        let phi = self.aug.phi_a();
        let ca = self.aug.c_a();
        let n_y = self.n_y();
        let mut w = DMatrix::zeros(n_y * self.horizon, phi.ncols());
        let mut p = phi.clone();
        for i in 0..self.horizon {
            w.view_mut((i * n_y, 0), (n_y, phi.ncols()))
                .copy_from(&(&ca * &p));
            p = &phi * p;
        }
        w
    }

    /// `W x_a + Z Δu_p`.
    pub fn predict(&self, dx: &[f64], y: &[f64], du: &DVector<f64>) -> Result<DVector<f64>> {
        if du.len() != self.z.ncols() {
            return Err(Error::Dimension {
                what: "input increment sequence",
                expected: self.z.ncols(),
                found: du.len(),
            });
        }
        Ok(self.free_response(dx, y)? + &self.z * du)
    }
}
