use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Output and input bounds over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub y_min: f64,
    pub y_max: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for BoundSet {
    fn default() -> Self {
        BoundSet {
            y_min: 0.2,
            y_max: 4.0,
            u_min: 0.0,
            u_max: f64::INFINITY,
        }
    }
}

impl BoundSet {
    pub fn validate(&self) -> Result<()> {
        if self.y_min > self.y_max || self.u_min > self.u_max {
            return Err(Error::Config("bounds are not ordered (min > max)".into()));
        }
        Ok(())
    }
}

/// `G Δu_p ≤ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequalities {
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl Inequalities {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Largest violation `max(GΔu − h)`, zero when satisfied.
    pub fn violation(&self, du: &DVector<f64>) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (&self.g * du - &self.h).max().max(0.0)
    }
}

/// `H₂`: block lower-triangular of identities mapping `Δu_p` to cumulative
/// input changes.
pub fn accumulation(n_u: usize, horizon: usize) -> DMatrix<f64> {
    let mut h2 = DMatrix::zeros(n_u * horizon, n_u * horizon);
    for i in 0..horizon {
        for j in 0..=i {
            h2.view_mut((i * n_u, j * n_u), (n_u, n_u))
                .fill_with_identity();
        }
    }
    h2
}

/// Stack `[−Z; Z; −H₂; H₂] Δu ≤ [−y_min + Wx_a; y_max − Wx_a;
/// −u_min + H₁u_prev; u_max − H₁u_prev]`, dropping rows with infinite bounds.
pub fn bound_constraints(
    z: &DMatrix<f64>,
    wx: &DVector<f64>,
    u_prev: &DVector<f64>,
    bounds: &BoundSet,
) -> Result<Inequalities> {
    bounds.validate()?;
    let n = z.ncols();
    let n_u = u_prev.len();
    if n_u == 0 || !n.is_multiple_of(n_u) || z.nrows() != wx.len() {
        return Err(Error::Dimension {
            what: "constraint blocks",
            expected: n,
            found: n_u,
        });
    }
    let h2 = accumulation(n_u, n / n_u);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    if bounds.y_min.is_finite() {
        for i in 0..z.nrows() {
            rows.push(-z.row(i).transpose());
            rhs.push(-bounds.y_min + wx[i]);
        }
    }
    if bounds.y_max.is_finite() {
        for i in 0..z.nrows() {
            rows.push(z.row(i).transpose());
            rhs.push(bounds.y_max - wx[i]);
        }
    }
    if bounds.u_min.is_finite() {
        for i in 0..n {
            rows.push(-h2.row(i).transpose());
            rhs.push(-bounds.u_min + u_prev[i % n_u]);
        }
    }
    if bounds.u_max.is_finite() {
        for i in 0..n {
            rows.push(h2.row(i).transpose());
            rhs.push(bounds.u_max - u_prev[i % n_u]);
        }
    }
    let g = if rows.is_empty() {
        DMatrix::zeros(0, n)
    } else {
        DMatrix::from_columns(&rows).transpose()
    };
    Ok(Inequalities {
        g,
        h: DVector::from_vec(rhs),
    })
}
