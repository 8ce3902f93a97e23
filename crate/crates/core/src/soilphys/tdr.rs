use super::SoilError;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Upper end of the calibrated permittivity range (free water).
pub const TOPP_MAX_PERMITTIVITY: f64 = 80.0;

/// Pulse round-trip time along a TDR transmission line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdrReading {
    pub travel_time_s: f64,
    pub line_length_m: f64,
    pub light_speed_m_per_s: f64,
}

impl TdrReading {
    pub fn new(travel_time_s: f64, line_length_m: f64) -> Result<Self, SoilError> {
        Self::with_light_speed(travel_time_s, line_length_m, SPEED_OF_LIGHT)
    }

    pub fn with_light_speed(t: f64, l: f64, c: f64) -> Result<Self, SoilError> {
        if !(t > 0.0 && l > 0.0 && c > 0.0) || !(t.is_finite() && l.is_finite() && c.is_finite()) {
            return Err(SoilError::InvalidReading);
        }
        Ok(TdrReading { travel_time_s: t, line_length_m: l, light_speed_m_per_s: c })
    }
}

/// Apparent dielectric permittivity, at least 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Permittivity(f64);

impl Permittivity {
    pub fn new(epsilon: f64) -> Result<Self, SoilError> {
        if !(epsilon >= 1.0) || !epsilon.is_finite() {
            return Err(SoilError::NonPhysical(epsilon));
        }
        Ok(Permittivity(epsilon))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// kappa = (t c / 2L)^2.
pub fn permittivity_from_travel_time(r: &TdrReading) -> Result<Permittivity, SoilError> {
    // t * (c / 2L) keeps the tc = 2L case exact
    let ratio = r.travel_time_s * (r.light_speed_m_per_s / (2.0 * r.line_length_m));
    Permittivity::new(ratio * ratio)
}

fn topp(e: f64) -> f64 {
    ((4.3e-6 * e - 5.5e-4) * e + 2.92e-2) * e - 5.3e-2
}

/// Topp's cubic. Not clamped: dry air reads slightly negative.
pub fn vwc_from_permittivity(p: Permittivity) -> Result<f64, SoilError> {
    let e = p.value();
    if e > TOPP_MAX_PERMITTIVITY {
        return Err(SoilError::OutOfRange(e));
    }
    Ok(topp(e))
}

/// Rounding slack on the inverse's domain ends.
const INVERSE_DOMAIN_SLACK: f64 = 1e-12;

/// Inverse of Topp's cubic by bisection on [1, 80], where the cubic is strictly increasing.
pub fn permittivity_from_vwc(theta: f64) -> Result<Permittivity, SoilError> {
    let (mut lo, mut hi) = (1.0, TOPP_MAX_PERMITTIVITY);
    if !(theta >= topp(lo) - INVERSE_DOMAIN_SLACK && theta <= topp(hi) + INVERSE_DOMAIN_SLACK) {
        return Err(SoilError::OutOfRange(theta));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if topp(mid) < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let e = if (topp(lo) - theta).abs() <= (topp(hi) - theta).abs() { lo } else { hi };
    Permittivity::new(e)
}
