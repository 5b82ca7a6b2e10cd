//! Classical pump: cw line or chirped Gaussian pulse incident from the left.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::omega_from_wavelength;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpKind {
    Cw,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub kind: PumpKind,
    /// Field amplitude `xi_p`, arbitrary units.
    pub amplitude: f64,
    /// Pulse duration `tau_p`, fs. Unused for cw.
    pub tau_fs: f64,
    /// Chirp parameter `a_p`.
    pub chirp: f64,
    /// Carrier angular frequency, rad/fs.
    pub omega0: f64,
    /// Incidence angle in the left ambient medium, rad.
    pub theta: f64,
    /// Polarization angle measured from the TE direction, rad.
    pub phi: f64,
}

impl PumpSpec {
    pub fn cw(wavelength_nm: f64) -> Self {
        PumpSpec {
            kind: PumpKind::Cw,
            amplitude: 1.0,
            tau_fs: 0.0,
            chirp: 0.0,
            omega0: omega_from_wavelength(wavelength_nm),
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn gaussian(wavelength_nm: f64, tau_fs: f64) -> Self {
        PumpSpec {
            kind: PumpKind::Gaussian,
            tau_fs,
            ..PumpSpec::cw(wavelength_nm)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::Misuse(format!("pump carrier {} rad/fs", self.omega0)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Misuse(format!("pump amplitude {} < 0", self.amplitude)));
        }
        if self.kind == PumpKind::Gaussian && !(self.tau_fs > 0.0 && self.tau_fs.is_finite()) {
            return Err(Error::Misuse(format!(
                "gaussian pump needs tau_fs > 0 (got {})",
                self.tau_fs
            )));
        }
        if !self.chirp.is_finite() || !(self.theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Misuse("pump chirp or incidence angle out of range".into()));
        }
        Ok(())
    }

    /// `(cos phi_p, sin phi_p)`: weights of the TE and TM components.
    pub fn polarization_split(&self) -> (f64, f64) {
        (self.phi.cos(), self.phi.sin())
    }

    /// Spectral amplitude of the Gaussian pulse (without polarization factor).
    pub fn spectrum(&self, omega: f64) -> Result<Complex64> {
        if self.kind != PumpKind::Gaussian {
            return Err(Error::Misuse(
                "cw pump has a delta spectrum; use the cw code path".into(),
            ));
        }
        Ok(self.gaussian_spectrum(omega))
    }

    pub(crate) fn gaussian_spectrum(&self, omega: f64) -> Complex64 {
        let q = Complex64::new(1.0, self.chirp);
        let dw = omega - self.omega0;
        let pre = self.amplitude * self.tau_fs / (2.0 * q).sqrt();
        pre * (-(self.tau_fs * self.tau_fs * dw * dw) / (4.0 * q)).exp()
    }

    /// Complex time envelope `xi exp(-(1 + i a) t^2 / tau^2)` without the carrier.
    pub fn envelope(&self, t_fs: f64) -> Complex64 {
        let q = Complex64::new(1.0, self.chirp);
        self.amplitude * (-(q * t_fs * t_fs) / (self.tau_fs * self.tau_fs)).exp()
    }

    /// Closed-form `integral |E(omega)|^2 d omega`.
    pub fn spectral_energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.tau_fs * (std::f64::consts::PI / 2.0).sqrt()
    }
}

pub fn pump_spectrum(spec: &PumpSpec, omega: f64) -> Result<Complex64> {
    spec.spectrum(omega)
}

pub fn pump_polarization_split(spec: &PumpSpec) -> (f64, f64) {
    spec.polarization_split()
}
