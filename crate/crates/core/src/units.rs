//! Unit conversion. Hydraulic inputs arrive in US customary units (GPM, ft³)
//! and are converted to SI exactly once, when a profile is loaded.

/// Cubic metres per second in one US gallon per minute.
pub const M3S_PER_GPM: f64 = 3.785_411_784e-3 / 60.0;
/// Cubic metres in one cubic foot.
pub const M3_PER_FT3: f64 = 0.028_316_846_592;
/// Litres per minute in one US gallon per minute.
pub const LPM_PER_GPM: f64 = 3.785_411_784;
pub const SECONDS_PER_HOUR: f64 = 3600.0;

pub fn gpm_to_m3s(q: f64) -> f64 {
    q * M3S_PER_GPM
}

pub fn ft3_to_m3(v: f64) -> f64 {
    v * M3_PER_FT3
}

pub fn m3s_to_lpm(q: f64) -> f64 {
    q / M3S_PER_GPM * LPM_PER_GPM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gpm_round_trip_through_lpm() {
        assert!((m3s_to_lpm(gpm_to_m3s(1.0)) - LPM_PER_GPM).abs() < 1e-12);
    }
}
