use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::PhysicalConstants;
use crate::em::C64;
use crate::error::{Error, Result};
use crate::spdc::{Channel, CwJsa, FrequencyGrid, JsaGrid};

/// Uniform time grid `tau_m = m * step` for `m` in `[-len/2, len/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    /// Grid conjugate to `omega` after zero-padding to `padded_len` points.
    pub fn conjugate(omega: &FrequencyGrid, padded_len: usize) -> TimeGrid {
        TimeGrid {
            step: 2.0 * PI / (padded_len as f64 * omega.step),
            len: padded_len,
        }
    }

    pub fn node(&self, k: usize) -> f64 {
        (k as f64 - (self.len / 2) as f64) * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.node(k)).collect()
    }
}

/// Options of [`time_domain_tpa`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGridSpec {
    /// Zero-padding factor, at least 2.
    pub pad: usize,
    /// Keep only `|tau| <= crop_fs`, if set.
    pub crop_fs: Option<f64>,
    /// Scale each channel to unit total probability.
    pub normalize: bool,
    /// `omega_s^0`; the signal grid center when unset.
    pub omega_s0: Option<f64>,
    /// `omega_i^0`; the idler grid center when unset.
    pub omega_i0: Option<f64>,
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        TimeGridSpec {
            pad: 2,
            crop_fs: None,
            normalize: true,
            omega_s0: None,
            omega_i0: None,
        }
    }
}

/// Two-photon amplitude `A(tau_s, tau_i)` per channel, row-major in `tau_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDomainTpa {
    pub tau_s: Vec<f64>,
    pub tau_i: Vec<f64>,
    pub sheets: [Vec<C64>; 4],
    pub normalized: bool,
}

impl TimeDomainTpa {
    pub fn at(&self, ch: Channel, i: usize, j: usize) -> C64 {
        self.sheets[ch.index()][i * self.tau_i.len() + j]
    }

    /// `sum |A|^2 dtau_s dtau_i` per channel.
    pub fn total_probability(&self) -> [f64; 4] {
        let cell = step_of(&self.tau_s) * step_of(&self.tau_i);
        Channel::ALL.map(|ch| {
            self.sheets[ch.index()].iter().map(|z| z.norm_sqr()).sum::<f64>() * cell
        })
    }
}

fn step_of(t: &[f64]) -> f64 {
    if t.len() > 1 {
        t[1] - t[0]
    } else {
        1.0
    }
}

fn padded_len(n: usize, pad: usize) -> usize {
    (n * pad.max(2)).next_power_of_two()
}

/// `phi(tau_s, tau_i) = 1/(2 pi) integral sqrt(w_s w_i / w_s0 w_i0) phi(w_s, w_i) exp(-i w_s tau_s - i w_i tau_i)`
/// on the FFT grids, scaled by the two-photon amplitude constant.
pub fn time_domain_tpa(
    jsa: &JsaGrid,
    spec: &TimeGridSpec,
    consts: &PhysicalConstants,
) -> Result<TimeDomainTpa> {
    if spec.pad < 2 {
        return Err(Error::InvalidGrid(format!(
            "zero-padding factor must be at least 2 (got {})",
            spec.pad
        )));
    }
    consts.validate()?;
    let gs = jsa.omega_s;
    let gi = jsa.omega_i;
    if gs.len < 2 || gi.len < 2 {
        return Err(Error::InvalidGrid("time-domain transform needs at least 2x2 nodes".into()));
    }
    let ws0 = spec.omega_s0.unwrap_or(0.5 * (gs.start + gs.stop()));
    let wi0 = spec.omega_i0.unwrap_or(0.5 * (gi.start + gi.stop()));
    let ms = padded_len(gs.len, spec.pad);
    let mi = padded_len(gi.len, spec.pad);
    let ts = TimeGrid::conjugate(&gs, ms);
    let ti = TimeGrid::conjugate(&gi, mi);
    let scale = consts.tpa_scale(ws0, wi0) / (2.0 * PI);

    let weight_s: Vec<f64> = (0..gs.len)
        .map(|k| gs.weight(k) * (gs.node(k) / ws0).sqrt())
        .collect();
    let weight_i: Vec<f64> = (0..gi.len)
        .map(|k| gi.weight(k) * (gi.node(k) / wi0).sqrt())
        .collect();
    let phase_s: Vec<C64> = ts.nodes().iter().map(|&t| C64::from_polar(1.0, -gs.start * t)).collect();
    let phase_i: Vec<C64> = ti.nodes().iter().map(|&t| C64::from_polar(1.0, -gi.start * t)).collect();

    let mut planner = FftPlanner::new();
    let fft_s = planner.plan_fft_forward(ms);
    let fft_i = planner.plan_fft_forward(mi);
    let zero = C64::new(0.0, 0.0);

    let sheets = Channel::ALL.map(|ch| {
        let mut buf = vec![zero; ms * mi];
        for i in 0..gs.len {
            for j in 0..gi.len {
                buf[i * mi + j] = jsa.at(ch, i, j) * (weight_s[i] * weight_i[j]);
            }
        }
        for row in buf.chunks_exact_mut(mi).take(gs.len) {
            fft_i.process(row);
        }
        let mut col = vec![zero; ms];
        for j in 0..mi {
            for i in 0..ms {
                col[i] = buf[i * mi + j];
            }
            fft_s.process(&mut col);
            for i in 0..ms {
                buf[i * mi + j] = col[i];
            }
        }
        // Reorder from FFT index order to m = -M/2..M/2 and apply the grid-start phases.
        let mut out = vec![zero; ms * mi];
        for a in 0..ms {
            let src_a = (a + ms - ms / 2) % ms;
            for b in 0..mi {
                let src_b = (b + mi - mi / 2) % mi;
                out[a * mi + b] = buf[src_a * mi + src_b] * phase_s[a] * phase_i[b] * scale;
            }
        }
        out
    });

    let mut tpa = TimeDomainTpa {
        tau_s: ts.nodes(),
        tau_i: ti.nodes(),
        sheets,
        normalized: false,
    };
    if spec.normalize {
        let totals = tpa.total_probability();
        for (sheet, total) in tpa.sheets.iter_mut().zip(totals) {
            if total > 0.0 {
                let f = total.sqrt().recip();
                sheet.iter_mut().for_each(|z| *z *= f);
            }
        }
        tpa.normalized = true;
    }
    if let Some(limit) = spec.crop_fs {
        tpa = crop(tpa, limit);
    }
    Ok(tpa)
}

fn crop(tpa: TimeDomainTpa, limit: f64) -> TimeDomainTpa {
    let keep = |t: &[f64]| -> Vec<usize> {
        (0..t.len()).filter(|&k| t[k].abs() <= limit).collect()
    };
    let ks = keep(&tpa.tau_s);
    let ki = keep(&tpa.tau_i);
    let n_i = tpa.tau_i.len();
    let sheets = std::array::from_fn(|c| {
        let src = &tpa.sheets[c];
        ks.iter()
            .flat_map(|&a| ki.iter().map(move |&b| src[a * n_i + b]))
            .collect()
    });
    TimeDomainTpa {
        tau_s: ks.iter().map(|&k| tpa.tau_s[k]).collect(),
        tau_i: ki.iter().map(|&k| tpa.tau_i[k]).collect(),
        sheets,
        normalized: tpa.normalized,
    }
}

/// Direct double-sum evaluation of the same transform at arbitrary times, unnormalized.
pub fn time_domain_tpa_direct(
    jsa: &JsaGrid,
    ch: Channel,
    tau_s: &[f64],
    tau_i: &[f64],
    omega_s0: f64,
    omega_i0: f64,
    consts: &PhysicalConstants,
) -> Vec<C64> {
    let gs = jsa.omega_s;
    let gi = jsa.omega_i;
    let scale = consts.tpa_scale(omega_s0, omega_i0) / (2.0 * PI);
    let mut out = Vec::with_capacity(tau_s.len() * tau_i.len());
    for &ts in tau_s {
        for &ti in tau_i {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..gs.len {
                let ws = gs.node(i);
                let ai = gs.weight(i) * (ws / omega_s0).sqrt();
                for j in 0..gi.len {
                    let wi = gi.node(j);
                    let w = ai * gi.weight(j) * (wi / omega_i0).sqrt();
                    acc += jsa.at(ch, i, j) * C64::from_polar(w, -ws * ts - wi * ti);
                }
            }
            out.push(acc * scale);
        }
    }
    out
}

/// Two-photon amplitude for cw pumping at the given times, unnormalized.
///
/// The idler frequency follows `omega_p - omega_s`, so `|A|^2` depends on
/// `tau_s - tau_i` only.
pub fn time_domain_cw(
    cw: &CwJsa,
    tau_s: &[f64],
    tau_i: &[f64],
    consts: &PhysicalConstants,
) -> Result<TimeDomainTpa> {
    consts.validate()?;
    let g = cw.omega_s;
    let w0 = 0.5 * cw.omega_p;
    let scale = consts.tpa_scale(w0, w0) / (2.0 * PI);
    let weight: Vec<f64> = (0..g.len)
        .map(|k| g.weight(k) * (g.node(k) * cw.omega_i(k)).sqrt() / w0)
        .collect();
    let weight = &weight;
    let sheets = Channel::ALL.map(|ch| {
        tau_s
            .par_iter()
            .flat_map_iter(|&ts| {
                tau_i.iter().map(move |&ti| {
                    let acc: C64 = (0..g.len)
                        .map(|k| {
                            cw.at(ch, k)
                                * C64::from_polar(weight[k], -g.node(k) * ts - cw.omega_i(k) * ti)
                        })
                        .sum();
                    acc * scale
                })
            })
            .collect()
    });
    Ok(TimeDomainTpa {
        tau_s: tau_s.to_vec(),
        tau_i: tau_i.to_vec(),
        sheets,
        normalized: false,
    })
}
