//! Conversions between the internal angular-frequency convention and the ordinary units
//! used in configuration files and outputs.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

pub fn khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}

pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Angular frequency in rad/s to ordinary frequency in MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

pub fn to_khz(w: f64) -> f64 {
    w / (TWO_PI * 1e3)
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}

pub fn to_us(t: f64) -> f64 {
    t * 1e6
}

pub fn deg(a: f64) -> f64 {
    a.to_radians()
}
