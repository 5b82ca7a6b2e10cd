//! Measurable quantities derived from joint spectral amplitudes.
//!
//! All frequency integrals use the composite trapezoid rule on the uniform
//! grids of the amplitude data.

mod efficiency;
mod flux;
mod hom;
mod spectra;
mod stats;
mod time_domain;

pub use efficiency::*;
pub use flux::*;
pub use hom::*;
pub use spectra::*;
pub use stats::*;
pub use time_domain::*;

use serde::{Deserialize, Serialize};

use crate::units::SPEED_OF_LIGHT;

/// Scale constants of the absolute observables.
///
/// Absolute rates are not a deliverable; the defaults give "arbitrary units"
/// that are consistent across runs. Relative quantities do not depend on them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub epsilon0: f64,
    /// nm/fs.
    pub c: f64,
    /// Transverse beam area.
    pub beam_area: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            epsilon0: 1.0,
            c: SPEED_OF_LIGHT,
            beam_area: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.hbar, self.epsilon0, self.c, self.beam_area];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(crate::Error::Misuse(format!(
                "physical constants must be positive: {self:?}"
            )))
        }
    }

    /// Factor between the two-photon amplitude and the frequency-to-time transform.
    pub fn tpa_scale(&self, omega_s0: f64, omega_i0: f64) -> f64 {
        self.hbar * (omega_s0 * omega_i0).sqrt()
            / (4.0 * std::f64::consts::PI * self.epsilon0 * self.c * self.beam_area)
    }
}
