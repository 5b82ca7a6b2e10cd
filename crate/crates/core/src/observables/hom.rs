use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dip_statistics, DipStats};
use crate::em::C64;
use crate::error::{Error, Result};
use crate::spdc::{Channel, CwJsa, JsaGrid};

/// Default fraction of the delay grid searched for the dip.
pub const DIP_WINDOW: f64 = 0.5;

/// Normalized coincidence rate `R_n(tau_l)` per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomScan {
    pub tau: Vec<f64>,
    pub channels: [Vec<f64>; 4],
    pub stats: [Option<DipStats>; 4],
}

impl HomScan {
    fn new(tau: Vec<f64>, channels: [Vec<f64>; 4], window: f64) -> HomScan {
        let stats = std::array::from_fn(|c| dip_statistics(&tau, &channels[c], window));
        HomScan { tau, channels, stats }
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        &self.channels[ch.index()]
    }
}

/// `rho(tau) = Re sum_d C_d exp(i d step tau) / R_0` with the kernel binned by index difference.
struct Kernel {
    /// `C_d` for `d = -(n-1)..=(n-1)`, stored at `d + n - 1`.
    coeffs: Vec<C64>,
    r0: f64,
    step: f64,
}

impl Kernel {
    fn rn(&self, tau: f64) -> f64 {
        if !(self.r0 > 0.0) {
            return 1.0;
        }
        let n = (self.coeffs.len() as isize + 1) / 2;
        let rho: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let d = k as isize - (n - 1);
                (c * C64::from_polar(1.0, d as f64 * self.step * tau)).re
            })
            .sum();
        1.0 - rho / self.r0
    }
}

fn scan(kernels: [Kernel; 4], tau: &[f64], window: f64) -> HomScan {
    let rows: Vec<[f64; 4]> = tau
        .par_iter()
        .map(|&t| std::array::from_fn(|c| kernels[c].rn(t)))
        .collect();
    let channels = std::array::from_fn(|c| rows.iter().map(|r| r[c]).collect());
    HomScan::new(tau.to_vec(), channels, window)
}

/// Hong-Ou-Mandel scan of a pulsed amplitude. Signal and idler grids must coincide.
pub fn hom_scan(jsa: &JsaGrid, tau: &[f64], window: f64) -> Result<HomScan> {
    if !jsa.is_square() {
        return Err(Error::InvalidGrid(
            "HOM interference needs identical signal and idler grids".into(),
        ));
    }
    let g = jsa.omega_s;
    let n = g.len;
    let kernels = Channel::ALL.map(|ch| {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n - 1];
        let mut r0 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let w = g.weight(j) * g.weight(k) * g.node(j) * g.node(k);
                let a = jsa.at(ch, j, k);
                coeffs[k + n - 1 - j] += a * jsa.at(ch, k, j).conj() * w;
                r0 += w * a.norm_sqr();
            }
        }
        Kernel { coeffs, r0, step: g.step }
    });
    Ok(scan(kernels, tau, window))
}

/// Hong-Ou-Mandel scan for cw pumping; the signal grid must be symmetric about `omega_p / 2`.
pub fn hom_scan_cw(cw: &CwJsa, tau: &[f64], window: f64) -> Result<HomScan> {
    if !cw.is_symmetric() {
        return Err(Error::InvalidGrid(
            "cw HOM interference needs a signal grid symmetric about half the pump frequency".into(),
        ));
    }
    let g = cw.omega_s;
    let n = g.len;
    let kernels = Channel::ALL.map(|ch| {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n - 1];
        let mut r0 = 0.0;
        for j in 0..n {
            let k = n - 1 - j;
            let w = g.weight(j) * g.node(j) * cw.omega_i(j);
            let a = cw.at(ch, j);
            coeffs[k + n - 1 - j] += a * cw.at(ch, k).conj() * w;
            r0 += w * a.norm_sqr();
        }
        Kernel { coeffs, r0, step: g.step }
    });
    Ok(scan(kernels, tau, window))
}

/// Evenly spaced delays from `-half_span` to `half_span`.
pub fn delay_grid(half_span: f64, len: usize) -> Vec<f64> {
    if len < 2 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|k| -half_span + 2.0 * half_span * k as f64 / (len - 1) as f64)
        .collect()
}
