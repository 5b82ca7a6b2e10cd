use serde::{Deserialize, Serialize};

use super::{fwhm, peak, PhysicalConstants};
use crate::error::{Error, Result};
use crate::spdc::{Channel, CwJsa, FrequencyGrid, JsaGrid, CW_NORMALIZATION};
use crate::units::wavelength_from_omega;

/// `|phi(omega_s, omega_i)|^2 d_omega_s d_omega_i` at a grid node.
///
/// Off-grid frequencies snap to the nearest node unless `strict` is set; the
/// returned flag reports whether snapping happened.
pub fn joint_photon_number(
    jsa: &JsaGrid,
    ch: Channel,
    omega_s: f64,
    omega_i: f64,
    d_omega_s: f64,
    d_omega_i: f64,
    strict: bool,
) -> Result<(f64, bool)> {
    let (i, snapped_s) = locate(&jsa.omega_s, omega_s, strict)?;
    let (j, snapped_i) = locate(&jsa.omega_i, omega_i, strict)?;
    Ok((
        jsa.at(ch, i, j).norm_sqr() * d_omega_s * d_omega_i,
        snapped_s || snapped_i,
    ))
}

fn locate(grid: &FrequencyGrid, omega: f64, strict: bool) -> Result<(usize, bool)> {
    match grid.exact_index(omega) {
        Ok(k) => Ok((k, false)),
        Err(e) if strict => Err(e),
        Err(_) => Ok((grid.nearest(omega), true)),
    }
}

/// Pair number of the trapezoid cell around node `(i, j)`; these sum to [`total_pairs`].
pub fn cell_photon_number(jsa: &JsaGrid, ch: Channel, i: usize, j: usize) -> f64 {
    jsa.at(ch, i, j).norm_sqr() * jsa.omega_s.weight(i) * jsa.omega_i.weight(j)
}

/// `d_omega_s integral |phi(omega_s, omega_i)|^2 d omega_i` at the signal node nearest `omega_s`.
pub fn marginal_signal_number(jsa: &JsaGrid, ch: Channel, omega_s: f64, d_omega_s: f64) -> f64 {
    let i = jsa.omega_s.nearest(omega_s);
    row_integral(jsa, ch, i) * d_omega_s
}

fn row_integral(jsa: &JsaGrid, ch: Channel, i: usize) -> f64 {
    (0..jsa.omega_i.len)
        .map(|j| jsa.at(ch, i, j).norm_sqr() * jsa.omega_i.weight(j))
        .sum()
}

fn column_integral(jsa: &JsaGrid, ch: Channel, j: usize) -> f64 {
    (0..jsa.omega_s.len)
        .map(|i| jsa.at(ch, i, j).norm_sqr() * jsa.omega_s.weight(i))
        .sum()
}

/// Overall pair number per channel.
pub fn total_pairs(jsa: &JsaGrid) -> [f64; 4] {
    Channel::ALL.map(|ch| {
        (0..jsa.omega_s.len)
            .map(|i| jsa.omega_s.weight(i) * row_integral(jsa, ch, i))
            .sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakStats {
    pub value: f64,
    pub omega: f64,
    pub wavelength_nm: f64,
    /// Width in wavelength of the half-maximum active region.
    pub fwhm_nm: Option<f64>,
}

fn peak_stats(omega: &[f64], wavelength: &[f64], s: &[f64]) -> Option<PeakStats> {
    let (k, value) = peak(s)?;
    if !(value > 0.0) {
        return None;
    }
    Some(PeakStats {
        value,
        omega: omega[k],
        wavelength_nm: wavelength[k],
        fwhm_nm: fwhm(wavelength, s),
    })
}

/// Energy spectra of one field (signal or idler) for all channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub wavelength_nm: Vec<f64>,
    /// Per channel, order FF, FB, BF, BB.
    pub channels: [Vec<f64>; 4],
    /// Sum of the channels whose photon of this field exits through `z_N`.
    pub forward: Vec<f64>,
    /// Sum of the channels whose photon of this field exits through `z_0`.
    pub backward: Vec<f64>,
    pub stats: [Option<PeakStats>; 4],
}

impl SpectrumResult {
    fn build(omega: Vec<f64>, channels: [Vec<f64>; 4], signal: bool) -> SpectrumResult {
        let wavelength_nm: Vec<f64> = omega.iter().map(|&w| wavelength_from_omega(w)).collect();
        let exits_forward = |ch: Channel| {
            let dir = if signal { ch.signal_exit() } else { ch.idler_exit() };
            dir == crate::em::Direction::Forward
        };
        let combine = |fwd: bool| -> Vec<f64> {
            (0..omega.len())
                .map(|k| {
                    Channel::ALL
                        .iter()
                        .filter(|&&ch| exits_forward(ch) == fwd)
                        .map(|ch| channels[ch.index()][k])
                        .sum()
                })
                .collect()
        };
        let forward = combine(true);
        let backward = combine(false);
        let stats = std::array::from_fn(|c| peak_stats(&omega, &wavelength_nm, &channels[c]));
        SpectrumResult {
            omega,
            wavelength_nm,
            channels,
            forward,
            backward,
            stats,
        }
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        &self.channels[ch.index()]
    }
}

/// `S_s(omega_s) = hbar omega_s integral |phi|^2 d omega_i`.
pub fn signal_spectrum(jsa: &JsaGrid, consts: &PhysicalConstants) -> SpectrumResult {
    let omega = jsa.omega_s.nodes();
    let channels = Channel::ALL.map(|ch| {
        omega
            .iter()
            .enumerate()
            .map(|(i, &w)| consts.hbar * w * row_integral(jsa, ch, i))
            .collect()
    });
    SpectrumResult::build(omega, channels, true)
}

/// `S_i(omega_i) = hbar omega_i integral |phi|^2 d omega_s`.
pub fn idler_spectrum(jsa: &JsaGrid, consts: &PhysicalConstants) -> SpectrumResult {
    let omega = jsa.omega_i.nodes();
    let channels = Channel::ALL.map(|ch| {
        omega
            .iter()
            .enumerate()
            .map(|(j, &w)| consts.hbar * w * column_integral(jsa, ch, j))
            .collect()
    });
    SpectrumResult::build(omega, channels, false)
}

/// cw signal spectrum per unit time.
pub fn signal_spectrum_cw(cw: &CwJsa, consts: &PhysicalConstants) -> SpectrumResult {
    let omega = cw.omega_s.nodes();
    let channels = Channel::ALL.map(|ch| {
        omega
            .iter()
            .enumerate()
            .map(|(k, &w)| consts.hbar * w * CW_NORMALIZATION * cw.at(ch, k).norm_sqr())
            .collect()
    });
    SpectrumResult::build(omega, channels, true)
}

/// cw idler spectrum per unit time, on the idler frequencies `omega_p - omega_s`
/// in increasing order.
pub fn idler_spectrum_cw(cw: &CwJsa, consts: &PhysicalConstants) -> SpectrumResult {
    let n = cw.omega_s.len;
    let order: Vec<usize> = (0..n).rev().collect();
    let omega: Vec<f64> = order.iter().map(|&k| cw.omega_i(k)).collect();
    let channels = Channel::ALL.map(|ch| {
        order
            .iter()
            .map(|&k| consts.hbar * cw.omega_i(k) * CW_NORMALIZATION * cw.at(ch, k).norm_sqr())
            .collect()
    });
    SpectrumResult::build(omega, channels, false)
}

/// Spectrum value at an exact grid node.
pub fn spectrum_at(spectrum: &SpectrumResult, ch: Channel, omega: f64) -> Result<f64> {
    let k = spectrum
        .omega
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidGrid("empty spectrum".into()))?;
    let step = if spectrum.omega.len() > 1 {
        (spectrum.omega[1] - spectrum.omega[0]).abs()
    } else {
        f64::INFINITY
    };
    if (spectrum.omega[k] - omega).abs() > 1e-6 * step {
        return Err(Error::OffGrid {
            omega,
            nearest: spectrum.omega[k],
        });
    }
    Ok(spectrum.channel(ch)[k])
}
