use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::em::C64;
use crate::error::{Error, Result};
use crate::pump::{PumpKind, PumpSpec};
use crate::spdc::{
    cw_point, Channel, CwJsa, EmissionGeometry, FrequencyGrid, JsaGrid, JsaMeta, PointAmplitude,
};
use crate::structure::Stack;
use crate::units::SPEED_OF_LIGHT;

/// Second frequency factor of the reference amplitude.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefFrequencyFactor {
    /// `sqrt(omega_p - omega_i)`, which equals `sqrt(omega_s)`.
    #[default]
    AsWritten,
    /// `sqrt(omega_i)`.
    Idler,
}

impl RefFrequencyFactor {
    fn value(self, omega_s: f64, omega_i: f64) -> f64 {
        match self {
            RefFrequencyFactor::AsWritten => omega_s.sqrt(),
            RefFrequencyFactor::Idler => omega_i.sqrt(),
        }
    }
}

/// `sum_l max|d^(l)| L_l` of the stack.
pub fn reference_coupling(stack: &Stack) -> f64 {
    stack
        .layers()
        .iter()
        .map(|l| l.chi2.max_abs() * l.thickness_nm)
        .sum()
}

fn reference_amplitude(
    omega_s: f64,
    omega_i: f64,
    pump_abs: f64,
    coupling: f64,
    factor: RefFrequencyFactor,
) -> C64 {
    let m = omega_s.sqrt() * factor.value(omega_s, omega_i) * pump_abs * coupling
        / (2.0 * (2.0 * PI).sqrt() * SPEED_OF_LIGHT);
    C64::new(0.0, -m)
}

fn reference_meta(stack: &Stack, pump: &PumpSpec) -> JsaMeta {
    JsaMeta {
        stack_digest: stack.digest(),
        pump: *pump,
        geometry: EmissionGeometry::te(0.0),
        forbidden_points: 0,
        singular_points: 0,
    }
}

/// Amplitude of the index-matched, fully phase-matched reference structure for a
/// pulsed pump. The single reference channel is stored in the FF sheet.
pub fn reference_jsa(
    stack: &Stack,
    pump: &PumpSpec,
    omega_s: FrequencyGrid,
    omega_i: FrequencyGrid,
    factor: RefFrequencyFactor,
) -> Result<JsaGrid> {
    if pump.kind != PumpKind::Gaussian {
        return Err(Error::Misuse("reference_jsa needs a gaussian pump".into()));
    }
    pump.validate()?;
    let coupling = reference_coupling(stack);
    let mut grid = JsaGrid::zeros(omega_s, omega_i, reference_meta(stack, pump));
    let sheet = &mut grid.sheets[Channel::FF.index()];
    for i in 0..omega_s.len {
        let ws = omega_s.node(i);
        for j in 0..omega_i.len {
            let wi = omega_i.node(j);
            let e = pump.spectrum(ws + wi)?.norm();
            sheet[i * omega_i.len + j] = reference_amplitude(ws, wi, e, coupling, factor);
        }
    }
    Ok(grid)
}

/// cw reference amplitude on the signal grid, stored in the FF channel.
pub fn reference_cw(
    stack: &Stack,
    pump: &PumpSpec,
    omega_s: FrequencyGrid,
    factor: RefFrequencyFactor,
) -> Result<CwJsa> {
    if pump.kind != PumpKind::Cw {
        return Err(Error::Misuse("reference_cw needs a cw pump".into()));
    }
    pump.validate()?;
    let coupling = reference_coupling(stack);
    let zero = C64::new(0.0, 0.0);
    let mut amplitudes: [Vec<C64>; 4] = std::array::from_fn(|_| vec![zero; omega_s.len]);
    amplitudes[Channel::FF.index()] = (0..omega_s.len)
        .map(|k| {
            let ws = omega_s.node(k);
            reference_amplitude(ws, pump.omega0 - ws, pump.amplitude, coupling, factor)
        })
        .collect();
    Ok(CwJsa {
        omega_s,
        omega_p: pump.omega0,
        amplitudes,
        meta: reference_meta(stack, pump),
    })
}

/// Relative pair-generation rate at one signal frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub omega_s: f64,
    /// Per channel, order FF, FB, BF, BB.
    pub channels: [f64; 4],
    pub total: f64,
}

impl EfficiencyReport {
    fn from_ratio(omega_s: f64, numerators: [f64; 4], reference: f64) -> Result<Self> {
        if !(reference > 0.0) {
            return Err(Error::UndefinedEfficiency { omega: omega_s });
        }
        let channels = numerators.map(|v| v / reference);
        Ok(EfficiencyReport {
            omega_s,
            channels,
            total: channels.iter().sum(),
        })
    }

    pub fn channel(&self, ch: Channel) -> f64 {
        self.channels[ch.index()]
    }
}

fn row_integral(jsa: &JsaGrid, sheet: usize, i: usize) -> f64 {
    let g = jsa.omega_i;
    (0..g.len)
        .map(|j| jsa.sheets[sheet][i * g.len + j].norm_sqr() * g.weight(j))
        .sum()
}

/// `eta^{mn}(omega_s) = S_s^{mn}(omega_s) / S_s^ref(omega_s)` for pulsed amplitudes on shared grids.
pub fn relative_efficiency(
    jsa: &JsaGrid,
    reference: &JsaGrid,
    omega_s: f64,
) -> Result<EfficiencyReport> {
    if !jsa.omega_s.same_as(&reference.omega_s) || !jsa.omega_i.same_as(&reference.omega_i) {
        return Err(Error::InvalidGrid(
            "amplitude and reference are on different grids".into(),
        ));
    }
    let i = jsa.omega_s.exact_index(omega_s)?;
    let reference_total: f64 = (0..4).map(|c| row_integral(reference, c, i)).sum();
    let numerators = std::array::from_fn(|c| row_integral(jsa, c, i));
    EfficiencyReport::from_ratio(jsa.omega_s.node(i), numerators, reference_total)
}

/// cw analogue of [`relative_efficiency`].
pub fn relative_efficiency_cw(
    cw: &CwJsa,
    reference: &CwJsa,
    omega_s: f64,
) -> Result<EfficiencyReport> {
    if !cw.omega_s.same_as(&reference.omega_s) || cw.omega_p != reference.omega_p {
        return Err(Error::InvalidGrid(
            "amplitude and reference are on different grids".into(),
        ));
    }
    let k = cw.omega_s.exact_index(omega_s)?;
    let reference_total: f64 = reference.amplitudes.iter().map(|a| a[k].norm_sqr()).sum();
    let numerators = Channel::ALL.map(|ch| cw.at(ch, k).norm_sqr());
    EfficiencyReport::from_ratio(cw.omega_s.node(k), numerators, reference_total)
}

/// cw efficiency at a single signal frequency, without building a grid.
pub fn efficiency_cw_point(
    stack: &Stack,
    pump: &PumpSpec,
    geometry: &EmissionGeometry,
    omega_s: f64,
    factor: RefFrequencyFactor,
) -> Result<EfficiencyReport> {
    let omega_i = pump.omega0 - omega_s;
    let reference =
        reference_amplitude(omega_s, omega_i, pump.amplitude, reference_coupling(stack), factor)
            .norm_sqr();
    let numerators = match cw_point(stack, pump, geometry, omega_s)? {
        PointAmplitude::Value(v) => v.map(|z| z.norm_sqr()),
        PointAmplitude::Forbidden => [0.0; 4],
    };
    EfficiencyReport::from_ratio(omega_s, numerators, reference)
}
