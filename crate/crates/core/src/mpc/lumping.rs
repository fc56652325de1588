use nalgebra::DVector;

use crate::error::{Error, Result};

/// Average consecutive groups of `steps` inputs into one held value each.
///
/// With booster flow constant over a group the injected mass is unchanged.
pub fn lump_schedule(series: &[DVector<f64>], steps: usize) -> Result<Vec<DVector<f64>>> {
    if steps == 0 || !series.len().is_multiple_of(steps) {
        return Err(Error::Config(format!(
            "booster period of {steps} steps does not divide a schedule of {}",
            series.len()
        )));
    }
    Ok(series
        .chunks(steps)
        .map(|c| c.iter().fold(DVector::zeros(c[0].len()), |acc, u| acc + u) / steps as f64)
        .collect())
}
