use nalgebra::DVector;

use crate::error::{Error, Result};

/// Diagonal weights and linear cost of the horizon objective
/// `½(y_p − r)ᵀQ(y_p − r) + ½Δu_pᵀRΔu_p + bᵀΔu_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    /// Diagonal of `Q`, length `n_y N_p`.
    pub q: DVector<f64>,
    /// Diagonal of `R`, length `n_u N_p`.
    pub r: DVector<f64>,
    /// `b = λ q^B ⊗ 1`, length `n_u N_p`.
    pub b: DVector<f64>,
    /// Stacked reference, length `n_y N_p`.
    pub y_ref: DVector<f64>,
}

impl CostWeights {
    /// `Q = q I`, `R = r I`, `b_j = λ q^B_j` repeated over the horizon, and a
    /// per-sensor reference held constant.
    pub fn uniform(
        horizon: usize,
        q: f64,
        r: f64,
        lambda: f64,
        booster_flow: &[f64],
        y_ref: &[f64],
    ) -> Result<Self> {
        let n_u = booster_flow.len();
        let n_y = y_ref.len();
        let w = CostWeights {
            q: DVector::from_element(n_y * horizon, q),
            r: DVector::from_element(n_u * horizon, r),
            b: DVector::from_fn(n_u * horizon, |i, _| lambda * booster_flow[i % n_u]),
            y_ref: DVector::from_fn(n_y * horizon, |i, _| y_ref[i % n_y]),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || self.r.iter().any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::Config(
                "Q and R must be positive definite (positive diagonal)".into(),
            ));
        }
        if self.q.len() != self.y_ref.len() || self.r.len() != self.b.len() {
            return Err(Error::Config("weight dimensions disagree".into()));
        }
        Ok(())
    }

    /// Same weights with `Q` and `R` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        CostWeights {
            q: &self.q * s,
            r: &self.r * s,
            ..self.clone()
        }
    }
}
