//! Unit conventions: lengths in nm, times in fs, angular frequencies in rad/fs.

use std::f64::consts::PI;

/// Speed of light in vacuum, nm/fs.
pub const SPEED_OF_LIGHT: f64 = 299.792458;

pub fn omega_from_wavelength(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength_nm
}

pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

/// Free-space wavenumber (rad/nm) at angular frequency `omega` (rad/fs).
pub fn vacuum_wavenumber(omega: f64) -> f64 {
    omega / SPEED_OF_LIGHT
}
