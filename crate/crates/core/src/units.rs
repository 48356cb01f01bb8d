//! Unit conventions.
//!
//! Internally every rate and detuning is an angular frequency in rad/µs,
//! times are in µs and lengths in mm. Configuration files use laboratory
//! units (MHz, GHz, ns, pJ); the helpers here do the conversion.

use std::f64::consts::PI;

/// Speed of light in mm/µs.
pub const SPEED_OF_LIGHT: f64 = 299_792.458;

/// Caesium ground-state hyperfine splitting in GHz.
pub const CS_HYPERFINE_GHZ: f64 = 9.192_631_770;

pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

pub fn rad_per_us_to_mhz(rate: f64) -> f64 {
    rate / (2.0 * PI)
}

pub fn ghz_to_rad_per_us(ghz: f64) -> f64 {
    2.0 * PI * 1e3 * ghz
}

pub fn rad_per_us_to_ghz(rate: f64) -> f64 {
    rate / (2.0 * PI * 1e3)
}

pub fn ns_to_us(ns: f64) -> f64 {
    ns * 1e-3
}

pub fn us_to_ns(us: f64) -> f64 {
    us * 1e3
}
