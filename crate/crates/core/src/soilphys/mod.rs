//! Dielectric conversions and field capacity estimation.

mod fieldcap;
mod tdr;

pub use fieldcap::{estimate_field_capacity, theil_sen_slope, FcConfig, FieldCapacityEstimate, RainEvent};
pub use tdr::{
    permittivity_from_travel_time, permittivity_from_vwc, vwc_from_permittivity, Permittivity,
    TdrReading, SPEED_OF_LIGHT, TOPP_MAX_PERMITTIVITY,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoilError {
    #[error("non-physical permittivity {0} (below vacuum)")]
    NonPhysical(f64),
    #[error("value {0} outside the calibrated range")]
    OutOfRange(f64),
    #[error("invalid TDR reading: travel time and line length must be positive")]
    InvalidReading,
    #[error("invalid rain event: {0}")]
    InvalidRainEvent(String),
    #[error("VWC series timestamps must be strictly increasing (index {0})")]
    UnsortedSeries(usize),
    #[error("no quiescent post-rain window found")]
    NoQuiescentWindow,
}
