use crate::error::{Error, Result};

/// How first-order reaction rates enter the discrete update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReactionFold {
    /// `k·Δt` (Δt in hours) on the diagonal, so the update tends to
    /// `exp(k t)` as Δt shrinks.
    #[default]
    Scaled,
    /// Pipe rates added unscaled, tank rates still scaled by Δt.
    PaperLiteral,
}

/// Effective pipe rate `k^P = k^b + k^w k^f / (D (k^w + k^f))`, per hour.
pub fn pipe_reaction_constant(kb: f64, kw: f64, kf: f64, diameter_m: f64) -> Result<f64> {
    if !(diameter_m > 0.0) {
        return Err(Error::Model(format!("nonpositive diameter {diameter_m}")));
    }
    if kw == 0.0 {
        return Ok(kb);
    }
    let denom = diameter_m * (kw + kf);
    if denom == 0.0 {
        return Err(Error::Model(
            "wall reaction: k^w + k^f is zero".into(),
        ));
    }
    let k = kb + kw * kf / denom;
    if !k.is_finite() {
        return Err(Error::Model(format!("reaction constant {k} is not finite")));
    }
    Ok(k)
}
