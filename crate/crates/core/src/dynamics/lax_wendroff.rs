use crate::error::{Error, Result};

/// Coefficients `(under, mid, over)` weighting the previous, current and next
/// segment in one Lax-Wendroff step at CFL number `cfl`.
///
/// They always sum to one; `cfl = 1` is the exact shift `(1, 0, 0)` and
/// `cfl = 0` the identity.
pub fn lw_coefficients(cfl: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&cfl) {
        return Err(Error::Cfl { cfl });
    }
    Ok((
        0.5 * cfl * (1.0 + cfl),
        1.0 - cfl * cfl,
        -0.5 * cfl * (1.0 - cfl),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_points() {
        assert_eq!(lw_coefficients(1.0).unwrap(), (1.0, 0.0, 0.0));
        assert_eq!(lw_coefficients(0.0).unwrap(), (0.0, 1.0, -0.0));
        assert_eq!(lw_coefficients(0.5).unwrap(), (0.375, 0.75, -0.125));
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(lw_coefficients(1.01), Err(Error::Cfl { .. })));
        assert!(lw_coefficients(-0.1).is_err());
        assert!(lw_coefficients(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn consistent(cfl in 0.0f64..=1.0) {
            let (a, b, c) = lw_coefficients(cfl).unwrap();
            prop_assert!((a + b + c - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
