use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fwhm, time_domain_tpa, PhysicalConstants, TimeGridSpec};
use crate::em::C64;
use crate::error::Result;
use crate::spdc::{Channel, JsaGrid};

/// Arrival time and duration of a photon-flux pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseStats {
    /// Time of the flux maximum, fs.
    pub delay: f64,
    pub fwhm: f64,
    pub peak: f64,
}

/// Photon flux of one field versus time, per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxResult {
    pub tau: Vec<f64>,
    pub channels: [Vec<f64>; 4],
    pub stats: [Option<PulseStats>; 4],
}

impl FluxResult {
    fn new(tau: Vec<f64>, channels: [Vec<f64>; 4]) -> FluxResult {
        let stats = std::array::from_fn(|c| pulse_stats(&tau, &channels[c]));
        FluxResult { tau, channels, stats }
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        &self.channels[ch.index()]
    }

    /// Time-integrated flux per channel (trapezoid rule).
    pub fn integrated(&self) -> [f64; 4] {
        self.channels.clone().map(|f| trapezoid(&self.tau, &f))
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Delay and width of a sampled pulse; `None` when the flux vanishes.
pub fn pulse_stats(tau: &[f64], flux: &[f64]) -> Option<PulseStats> {
    let (k, peak) = super::peak(flux)?;
    if !(peak > 0.0) {
        return None;
    }
    Some(PulseStats {
        delay: tau[k],
        fwhm: fwhm(tau, flux)?,
        peak,
    })
}

/// Signal photon flux
/// `N(tau) = hbar/(8 pi) integral d w_i |integral d w_s sqrt(w_s) phi(w_s, w_i) exp(-i w_s tau)|^2`
/// at the given times.
pub fn photon_flux(jsa: &JsaGrid, tau: &[f64], consts: &PhysicalConstants) -> Result<FluxResult> {
    consts.validate()?;
    let gs = jsa.omega_s;
    let gi = jsa.omega_i;
    let weight_s: Vec<f64> = (0..gs.len).map(|i| gs.weight(i) * gs.node(i).sqrt()).collect();
    let scale = consts.hbar / (8.0 * PI);
    let per_tau: Vec<[f64; 4]> = tau
        .par_iter()
        .map(|&t| {
            let phase: Vec<C64> = (0..gs.len)
                .map(|i| C64::from_polar(weight_s[i], -gs.node(i) * t))
                .collect();
            Channel::ALL.map(|ch| {
                let sheet = jsa.sheet(ch);
                (0..gi.len)
                    .map(|j| {
                        let f: C64 = (0..gs.len).map(|i| sheet[i * gi.len + j] * phase[i]).sum();
                        gi.weight(j) * f.norm_sqr()
                    })
                    .sum::<f64>()
                    * scale
            })
        })
        .collect();
    let channels = std::array::from_fn(|c| per_tau.iter().map(|v| v[c]).collect());
    Ok(FluxResult::new(tau.to_vec(), channels))
}

/// Narrow-idler approximation `N(tau_s) = hbar w_s0 / 4 integral d tau_i |phi(tau_s, tau_i)|^2`,
/// on the transform grid of [`time_domain_tpa`].
pub fn photon_flux_narrow(
    jsa: &JsaGrid,
    pad: usize,
    omega_s0: f64,
    omega_i0: f64,
    consts: &PhysicalConstants,
) -> Result<FluxResult> {
    let spec = TimeGridSpec {
        pad,
        crop_fs: None,
        normalize: false,
        omega_s0: Some(omega_s0),
        omega_i0: Some(omega_i0),
    };
    let tpa = time_domain_tpa(jsa, &spec, consts)?;
    // Undo the two-photon amplitude constant to recover the bare transform.
    let unscale = consts.tpa_scale(omega_s0, omega_i0).recip();
    let dti = if tpa.tau_i.len() > 1 { tpa.tau_i[1] - tpa.tau_i[0] } else { 1.0 };
    let ni = tpa.tau_i.len();
    let factor = consts.hbar * omega_s0 / 4.0 * dti * unscale * unscale;
    let channels = std::array::from_fn(|c| {
        tpa.sheets[c]
            .chunks_exact(ni)
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>() * factor)
            .collect()
    });
    Ok(FluxResult::new(tpa.tau_s, channels))
}
