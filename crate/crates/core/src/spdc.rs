//! Joint spectral amplitudes of photon pairs leaving the stack.
//!
//! Every nonlinear layer emits pairs into internal forward/backward signal
//! and idler waves. Those internal waves are expressed through the exit
//! channels with the complex-conjugated decomposition `D^{(l)}` (the output
//! state carries creation operators), then projected on the analyzers.
//!
//! Channel order is FF, FB, BF, BB: first letter signal, second idler, `F`
//! meaning exit through the right facet `z_N`, `B` through the left facet `z_0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{
    field_map_from_chain, AngleSet, Direction, Field, FieldMap, Polarization, TransferChain,
    TwoPortMatrix, C64,
};
use crate::error::{Error, Result};
use crate::pump::{PumpKind, PumpSpec};
use crate::structure::{Chi2Tensor, Stack};
use crate::units::SPEED_OF_LIGHT;

/// Pump spectral amplitudes below this fraction of the peak are treated as zero.
pub const PUMP_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    FF,
    FB,
    BF,
    BB,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::FF, Channel::FB, Channel::BF, Channel::BB];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_exits(signal: Direction, idler: Direction) -> Channel {
        Channel::ALL[2 * signal.index() + idler.index()]
    }

    pub fn signal_exit(self) -> Direction {
        Direction::BOTH[self.index() / 2]
    }

    pub fn idler_exit(self) -> Direction {
        Direction::BOTH[self.index() % 2]
    }

    pub fn label(self) -> &'static str {
        ["FF", "FB", "BF", "BB"][self.index()]
    }
}

/// Signal emission angle in the left ambient medium and analyzer angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionGeometry {
    pub theta_s: f64,
    pub phi_s: f64,
    pub phi_i: f64,
}

impl EmissionGeometry {
    pub fn te(theta_s: f64) -> Self {
        EmissionGeometry {
            theta_s,
            phi_s: 0.0,
            phi_i: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta_s.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Misuse(format!(
                "signal angle {} rad outside (-pi/2, pi/2)",
                self.theta_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdlerAngle {
    Angle(f64),
    Forbidden,
}

/// Idler angle from transverse phase matching in a medium shared by all three fields.
pub fn idler_angle(
    omega_p: f64,
    omega_s: f64,
    omega_i: f64,
    theta_p: f64,
    theta_s: f64,
) -> IdlerAngle {
    let arg = (omega_p / omega_i) * theta_p.sin() - (omega_s / omega_i) * theta_s.sin();
    if arg.abs() > 1.0 {
        IdlerAngle::Forbidden
    } else {
        IdlerAngle::Angle(arg.asin())
    }
}

/// Uniform angular-frequency grid `start + k step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(start > 0.0 && stop > start) || !stop.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "frequency grid needs 0 < start < stop and >= 2 points (got {start}..{stop}, {len})"
            )));
        }
        Ok(FrequencyGrid {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    /// `omega_center * [1 - half_span, 1 + half_span]`.
    pub fn centered(omega_center: f64, half_span: f64, len: usize) -> Result<Self> {
        FrequencyGrid::new(
            omega_center * (1.0 - half_span),
            omega_center * (1.0 + half_span),
            len,
        )
    }

    pub fn node(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn stop(&self) -> f64 {
        self.node(self.len - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.node(k)).collect()
    }

    /// Trapezoid quadrature weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }

    pub fn nearest(&self, omega: f64) -> usize {
        let k = ((omega - self.start) / self.step).round();
        k.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Index of the node equal to `omega` within a millionth of a step.
    pub fn exact_index(&self, omega: f64) -> Result<usize> {
        let k = self.nearest(omega);
        let nearest = self.node(k);
        if (nearest - omega).abs() > 1e-6 * self.step {
            return Err(Error::OffGrid { omega, nearest });
        }
        Ok(k)
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-12 * self.start
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsaMeta {
    pub stack_digest: String,
    pub pump: PumpSpec,
    pub geometry: EmissionGeometry,
    /// Points zeroed because the idler has no propagating exit.
    pub forbidden_points: usize,
    /// Points zeroed because a structure matrix was singular or an angle grazing.
    pub singular_points: usize,
}

/// Two-dimensional amplitudes for pulsed pumping; sheets are row-major with
/// rows indexed by the signal frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaGrid {
    pub omega_s: FrequencyGrid,
    pub omega_i: FrequencyGrid,
    pub sheets: [Vec<C64>; 4],
    pub meta: JsaMeta,
}

impl JsaGrid {
    pub fn zeros(omega_s: FrequencyGrid, omega_i: FrequencyGrid, meta: JsaMeta) -> JsaGrid {
        let n = omega_s.len * omega_i.len;
        JsaGrid {
            omega_s,
            omega_i,
            sheets: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]),
            meta,
        }
    }

    pub fn at(&self, ch: Channel, i: usize, j: usize) -> C64 {
        self.sheets[ch.index()][i * self.omega_i.len + j]
    }

    pub fn sheet(&self, ch: Channel) -> &[C64] {
        &self.sheets[ch.index()]
    }

    pub fn is_square(&self) -> bool {
        self.omega_s.same_as(&self.omega_i)
    }

    pub fn scaled(&self, factor: f64) -> JsaGrid {
        let mut out = self.clone();
        out.sheets
            .iter_mut()
            .flatten()
            .for_each(|z| *z *= factor);
        out
    }
}

/// Amplitudes for cw pumping, `omega_i = omega_p - omega_s` implied.
///
/// Squared moduli are per unit interaction time: the formal square of the
/// energy delta becomes `1 / (2 pi)` per unit time, applied downstream by
/// [`CW_NORMALIZATION`].
#[derive(Debug, Clone, PartialEq)]
pub struct CwJsa {
    pub omega_s: FrequencyGrid,
    pub omega_p: f64,
    pub amplitudes: [Vec<C64>; 4],
    pub meta: JsaMeta,
}

/// Factor converting `|cw amplitude|^2` into a rate per unit time.
pub const CW_NORMALIZATION: f64 = 1.0 / (2.0 * std::f64::consts::PI);

impl CwJsa {
    pub fn at(&self, ch: Channel, k: usize) -> C64 {
        self.amplitudes[ch.index()][k]
    }

    pub fn omega_i(&self, k: usize) -> f64 {
        self.omega_p - self.omega_s.node(k)
    }

    /// True when the idler frequencies `omega_p - omega_s` form the reversed signal grid.
    pub fn is_symmetric(&self) -> bool {
        let g = &self.omega_s;
        (g.start + g.stop() - self.omega_p).abs() <= 1e-9 * g.step
    }
}

/// Common amplitude prefactor `-i sqrt(omega_s omega_i) / (2 sqrt(2 pi) c)`.
pub fn prefactor(omega_s: f64, omega_i: f64) -> C64 {
    let m = (omega_s * omega_i).sqrt() / (2.0 * (2.0 * std::f64::consts::PI).sqrt() * SPEED_OF_LIGHT);
    C64::new(0.0, -m)
}

/// `sin(z) / z` with the removable singularity filled in.
pub fn sinc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        C64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `d : e_p e_s e_i`.
pub fn contract(d: &Chi2Tensor, e_p: &[C64; 3], e_s: &[C64; 3], e_i: &[C64; 3]) -> C64 {
    if let Some(scalar) = d.as_te_scalar() {
        return e_p[0] * e_s[0] * e_i[0] * scalar;
    }
    let mut acc = C64::new(0.0, 0.0);
    for (a, da) in d.0.iter().enumerate() {
        if e_p[a] == C64::new(0.0, 0.0) {
            continue;
        }
        for (b, db) in da.iter().enumerate() {
            let pb = e_p[a] * e_s[b];
            for (c, &v) in db.iter().enumerate() {
                if v != 0.0 {
                    acc += pb * e_i[c] * v;
                }
            }
        }
    }
    acc
}

/// One layer's contribution for fixed directions and polarizations:
/// `(d : e_p e_s e_i) A_m L exp(i dK L / 2) sinc(dK L / 2)`.
pub fn layer_term(
    d: &Chi2Tensor,
    e_p: &[C64; 3],
    e_s: &[C64; 3],
    e_i: &[C64; 3],
    a_m: C64,
    delta_k: C64,
    thickness: f64,
) -> C64 {
    let coupling = contract(d, e_p, e_s, e_i);
    if coupling == C64::new(0.0, 0.0) {
        return coupling;
    }
    let x = delta_k * (0.5 * thickness);
    coupling * a_m * thickness * (C64::i() * x).exp() * sinc(x)
}

/// Polarization unit vector in `region` of a field with the given angles.
///
/// TE is `+x` for both directions; TM is `(0, cos, -sin)` forward and
/// `(0, cos, +sin)` backward.
pub fn polarization_vector(
    angles: &AngleSet,
    region: usize,
    pol: Polarization,
    dir: Direction,
) -> [C64; 3] {
    let z = C64::new(0.0, 0.0);
    match pol {
        Polarization::Te => [C64::new(1.0, 0.0), z, z],
        Polarization::Tm => {
            let s = angles.sin(region);
            [z, angles.cos[region], C64::new(-dir.sign() * s, 0.0)]
        }
    }
}

/// Analyzer projection of a TE or TM exit amplitude onto the analyzer at `phi`.
pub fn analyzer_coefficient(pol: Polarization, phi: f64) -> f64 {
    match pol {
        Polarization::Te => phi.cos(),
        Polarization::Tm => -phi.sin(),
    }
}

/// Pump optics at one frequency: unit-incidence field maps per polarization.
#[derive(Debug, Clone)]
pub struct PumpOptics {
    pub angles: AngleSet,
    maps: [Option<FieldMap>; 2],
}

/// Signal or idler optics: per-layer exit decompositions per polarization.
#[derive(Debug, Clone)]
pub struct ExitOptics {
    pub angles: AngleSet,
    decomposition: [Option<Vec<TwoPortMatrix>>; 2],
}

/// Outcome of a single-point amplitude evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointAmplitude {
    Value([C64; 4]),
    Forbidden,
}

/// Precomputed per-stack data for amplitude evaluation.
#[derive(Debug, Clone)]
pub struct SpdcModel<'a> {
    stack: &'a Stack,
    pump: PumpSpec,
    geometry: EmissionGeometry,
    nonlinear: Vec<usize>,
    pump_pols: Vec<(Polarization, f64)>,
    signal_pols: Vec<(Polarization, f64)>,
    idler_pols: Vec<(Polarization, f64)>,
}

fn active(weights: [(Polarization, f64); 2]) -> Vec<(Polarization, f64)> {
    weights.into_iter().filter(|(_, w)| *w != 0.0).collect()
}

impl<'a> SpdcModel<'a> {
    pub fn new(stack: &'a Stack, pump: PumpSpec, geometry: EmissionGeometry) -> Result<Self> {
        pump.validate()?;
        geometry.validate()?;
        let (te, tm) = pump.polarization_split();
        Ok(SpdcModel {
            stack,
            pump,
            geometry,
            nonlinear: (1..=stack.layer_count())
                .filter(|&l| !stack.layers()[l - 1].chi2.is_zero())
                .collect(),
            pump_pols: active([(Polarization::Te, te), (Polarization::Tm, tm)]),
            signal_pols: active([
                (Polarization::Te, analyzer_coefficient(Polarization::Te, geometry.phi_s)),
                (Polarization::Tm, analyzer_coefficient(Polarization::Tm, geometry.phi_s)),
            ]),
            idler_pols: active([
                (Polarization::Te, analyzer_coefficient(Polarization::Te, geometry.phi_i)),
                (Polarization::Tm, analyzer_coefficient(Polarization::Tm, geometry.phi_i)),
            ]),
        })
    }

    pub fn stack(&self) -> &Stack {
        self.stack
    }

    pub fn pump(&self) -> &PumpSpec {
        &self.pump
    }

    pub fn geometry(&self) -> &EmissionGeometry {
        &self.geometry
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinear.is_empty()
    }

    pub fn pump_optics(&self, omega_p: f64) -> Result<PumpOptics> {
        let n = self.stack.indices(omega_p)?;
        let invariant = n[0] * self.pump.theta.sin();
        let angles = AngleSet::from_invariant(n, omega_p, invariant, Field::Pump);
        let mut maps: [Option<FieldMap>; 2] = [None, None];
        for &(pol, _) in &self.pump_pols {
            let chain = TransferChain::new(self.stack, &angles, pol)?;
            maps[pol.index()] = Some(field_map_from_chain(
                &chain,
                omega_p,
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            )?);
        }
        Ok(PumpOptics { angles, maps })
    }

    fn exit_optics(
        &self,
        angles: AngleSet,
        pols: &[(Polarization, f64)],
    ) -> Result<ExitOptics> {
        let mut decomposition: [Option<Vec<TwoPortMatrix>>; 2] = [None, None];
        for &(pol, _) in pols {
            let chain = TransferChain::new(self.stack, &angles, pol)?;
            decomposition[pol.index()] = Some(chain.exit_decomposition()?);
        }
        Ok(ExitOptics {
            angles,
            decomposition,
        })
    }

    pub fn signal_optics(&self, omega_s: f64) -> Result<ExitOptics> {
        let n = self.stack.indices(omega_s)?;
        let invariant = n[0] * self.geometry.theta_s.sin();
        let angles = AngleSet::from_invariant(n, omega_s, invariant, Field::Signal);
        self.exit_optics(angles, &self.signal_pols)
    }

    /// Idler Snell invariant from transverse momentum conservation in the left
    /// ambient medium, or `None` when the idler cannot propagate there.
    pub fn idler_invariant(&self, omega_p: f64, omega_s: f64, omega_i: f64) -> Result<Option<f64>> {
        let ambient = self.stack.ambient_left();
        let (np, ns, ni) = (
            ambient.index_at(omega_p)?,
            ambient.index_at(omega_s)?,
            ambient.index_at(omega_i)?,
        );
        let ky = np * omega_p * self.pump.theta.sin() - ns * omega_s * self.geometry.theta_s.sin();
        let invariant = ky / omega_i;
        if invariant.abs() >= ni {
            return Ok(None);
        }
        Ok(Some(invariant))
    }

    pub fn idler_optics(
        &self,
        omega_p: f64,
        omega_s: f64,
        omega_i: f64,
        idler_indices: Option<&[f64]>,
    ) -> Result<Option<ExitOptics>> {
        let Some(invariant) = self.idler_invariant(omega_p, omega_s, omega_i)? else {
            return Ok(None);
        };
        let n = match idler_indices {
            Some(n) => n.to_vec(),
            None => self.stack.indices(omega_i)?,
        };
        let angles = AngleSet::from_invariant(n, omega_i, invariant, Field::Idler);
        self.exit_optics(angles, &self.idler_pols).map(Some)
    }

    /// Channel amplitudes for unit pump spectral amplitude, without the common prefactor.
    pub fn layer_sum(&self, pump: &PumpOptics, signal: &ExitOptics, idler: &ExitOptics) -> [C64; 4] {
        let zero = C64::new(0.0, 0.0);
        let mut out = [zero; 4];
        let (pump_te, pump_tm) = self.pump.polarization_split();
        for &l in &self.nonlinear {
            let layer = &self.stack.layers()[l - 1];
            let d = &layer.chi2;
            let len = layer.thickness_nm;
            let (kp, ks, ki) = (pump.angles.kz[l], signal.angles.kz[l], idler.angles.kz[l]);
            for &(pa, _) in &self.pump_pols {
                let weight = if pa == Polarization::Te { pump_te } else { pump_tm };
                let a = pump.maps[pa.index()].as_ref().expect("pump map").layer(l);
                for &(sb, cs) in &self.signal_pols {
                    let ds = &signal.decomposition[sb.index()].as_ref().expect("signal D")[l - 1];
                    for &(ig, ci) in &self.idler_pols {
                        let di = &idler.decomposition[ig.index()].as_ref().expect("idler D")[l - 1];
                        for m in Direction::BOTH {
                            let am = a[m.index()] * weight;
                            if am == zero {
                                continue;
                            }
                            let ep = polarization_vector(&pump.angles, l, pa, m);
                            for n in Direction::BOTH {
                                let es = polarization_vector(&signal.angles, l, sb, n);
                                for o in Direction::BOTH {
                                    let ei = polarization_vector(&idler.angles, l, ig, o);
                                    let dk = kp * m.sign() - ks * n.sign() - ki * o.sign();
                                    let term = layer_term(d, &ep, &es, &ei, am, dk, len);
                                    if term == zero {
                                        continue;
                                    }
                                    let term = term * (cs * ci);
                                    let row_s = &ds.0[n.index()];
                                    let row_i = &di.0[o.index()];
                                    for (k, slot) in out.iter_mut().enumerate() {
                                        *slot += term * row_s[k / 2].conj() * row_i[k % 2].conj();
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Full channel amplitudes at one frequency pair for pump spectral amplitude `e_p`.
    pub fn point(&self, omega_s: f64, omega_i: f64, e_p: C64) -> Result<PointAmplitude> {
        let omega_p = omega_s + omega_i;
        let Some(idler) = self.idler_optics(omega_p, omega_s, omega_i, None)? else {
            return Ok(PointAmplitude::Forbidden);
        };
        let pump = self.pump_optics(omega_p)?;
        let signal = self.signal_optics(omega_s)?;
        let scale = prefactor(omega_s, omega_i) * e_p;
        Ok(PointAmplitude::Value(
            self.layer_sum(&pump, &signal, &idler).map(|z| z * scale),
        ))
    }

    fn meta(&self) -> JsaMeta {
        JsaMeta {
            stack_digest: self.stack.digest(),
            pump: self.pump,
            geometry: self.geometry,
            forbidden_points: 0,
            singular_points: 0,
        }
    }
}

enum Cell {
    Value([C64; 4]),
    Zero,
    Forbidden,
    Singular,
}

/// Converts numerical failures into a flagged zero; input errors propagate.
fn flag<T>(r: Result<T>) -> Result<std::result::Result<T, Cell>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_numerical() => Ok(Err(Cell::Singular)),
        Err(e) => Err(e),
    }
}

/// Joint spectral amplitude for a Gaussian pump on the given grids.
pub fn jsa(
    stack: &Stack,
    pump: &PumpSpec,
    geometry: &EmissionGeometry,
    omega_s: FrequencyGrid,
    omega_i: FrequencyGrid,
) -> Result<JsaGrid> {
    if pump.kind != PumpKind::Gaussian {
        return Err(Error::Misuse("jsa needs a gaussian pump; use jsa_cw for cw".into()));
    }
    let model = SpdcModel::new(stack, *pump, *geometry)?;
    let mut grid = JsaGrid::zeros(omega_s, omega_i, model.meta());
    if model.is_linear() {
        return Ok(grid);
    }

    let peak = pump.amplitude * pump.tau_fs / 2f64.sqrt() / (1.0 + pump.chirp * pump.chirp).powf(0.25);
    let cutoff = PUMP_CUTOFF * peak;

    // Pump optics depend only on omega_s + omega_i; share them along anti-diagonals
    // when both grids have the same step.
    let shared_step = (omega_s.step - omega_i.step).abs() <= 1e-12 * omega_s.step;
    let sums: Vec<Option<std::result::Result<(C64, PumpOptics), Cell>>> = if shared_step {
        (0..omega_s.len + omega_i.len - 1)
            .into_par_iter()
            .map(|k| {
                let wp = omega_s.start + omega_i.start + omega_s.step * k as f64;
                let e = pump.gaussian_spectrum(wp);
                if e.norm() < cutoff {
                    return Ok(None);
                }
                Ok(Some(flag(model.pump_optics(wp))?.map(|p| (e, p))))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let idler_indices: Vec<Vec<f64>> = (0..omega_i.len)
        .into_par_iter()
        .map(|j| stack.indices(omega_i.node(j)))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<Cell>> = (0..omega_s.len)
        .into_par_iter()
        .map(|i| -> Result<Vec<Cell>> {
            let ws = omega_s.node(i);
            let mut signal: Option<std::result::Result<ExitOptics, Cell>> = None;
            let mut row = Vec::with_capacity(omega_i.len);
            for j in 0..omega_i.len {
                let wi = omega_i.node(j);
                let wp = ws + wi;
                let local;
                let (e, pump_optics) = if shared_step {
                    match &sums[i + j] {
                        None => {
                            row.push(Cell::Zero);
                            continue;
                        }
                        Some(Err(_)) => {
                            row.push(Cell::Singular);
                            continue;
                        }
                        Some(Ok((e, p))) => (*e, p),
                    }
                } else {
                    let e = pump.gaussian_spectrum(wp);
                    if e.norm() < cutoff {
                        row.push(Cell::Zero);
                        continue;
                    }
                    match flag(model.pump_optics(wp))? {
                        Ok(p) => {
                            local = p;
                            (e, &local)
                        }
                        Err(c) => {
                            row.push(c);
                            continue;
                        }
                    }
                };
                if signal.is_none() {
                    signal = Some(flag(model.signal_optics(ws))?);
                }
                let sig = match signal.as_ref().unwrap() {
                    Ok(s) => s,
                    Err(_) => {
                        row.push(Cell::Singular);
                        continue;
                    }
                };
                let idler = match flag(model.idler_optics(wp, ws, wi, Some(&idler_indices[j])))? {
                    Ok(Some(o)) => o,
                    Ok(None) => {
                        row.push(Cell::Forbidden);
                        continue;
                    }
                    Err(c) => {
                        row.push(c);
                        continue;
                    }
                };
                let scale = prefactor(ws, wi) * e;
                row.push(Cell::Value(
                    model.layer_sum(pump_optics, sig, &idler).map(|z| z * scale),
                ));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let gi = omega_i.len;
    for (i, row) in rows.into_iter().enumerate() {
        for (j, cell) in row.into_iter().enumerate() {
            match cell {
                Cell::Value(v) => {
                    for (sheet, z) in grid.sheets.iter_mut().zip(v) {
                        sheet[i * gi + j] = z;
                    }
                }
                Cell::Zero => {}
                Cell::Forbidden => grid.meta.forbidden_points += 1,
                Cell::Singular => grid.meta.singular_points += 1,
            }
        }
    }
    Ok(grid)
}

/// Signal-frequency amplitudes for a cw pump at its carrier frequency.
pub fn jsa_cw(
    stack: &Stack,
    pump: &PumpSpec,
    geometry: &EmissionGeometry,
    omega_s: FrequencyGrid,
) -> Result<CwJsa> {
    if pump.kind != PumpKind::Cw {
        return Err(Error::Misuse("jsa_cw needs a cw pump".into()));
    }
    let model = SpdcModel::new(stack, *pump, *geometry)?;
    let wp = pump.omega0;
    if omega_s.stop() >= wp {
        return Err(Error::InvalidGrid(format!(
            "signal grid reaches {} rad/fs, at or above the pump frequency {wp}",
            omega_s.stop()
        )));
    }
    let zero = C64::new(0.0, 0.0);
    let mut out = CwJsa {
        omega_s,
        omega_p: wp,
        amplitudes: std::array::from_fn(|_| vec![zero; omega_s.len]),
        meta: model.meta(),
    };
    if model.is_linear() {
        return Ok(out);
    }
    let pump_optics = match flag(model.pump_optics(wp))? {
        Ok(p) => p,
        Err(_) => {
            out.meta.singular_points = omega_s.len;
            return Ok(out);
        }
    };
    let e = C64::new(pump.amplitude, 0.0);
    let cells: Vec<Cell> = (0..omega_s.len)
        .into_par_iter()
        .map(|k| -> Result<Cell> {
            let ws = omega_s.node(k);
            let wi = wp - ws;
            let signal = match flag(model.signal_optics(ws))? {
                Ok(s) => s,
                Err(c) => return Ok(c),
            };
            let idler = match flag(model.idler_optics(wp, ws, wi, None))? {
                Ok(Some(o)) => o,
                Ok(None) => return Ok(Cell::Forbidden),
                Err(c) => return Ok(c),
            };
            let scale = prefactor(ws, wi) * e;
            Ok(Cell::Value(
                model.layer_sum(&pump_optics, &signal, &idler).map(|z| z * scale),
            ))
        })
        .collect::<Result<_>>()?;
    for (k, cell) in cells.into_iter().enumerate() {
        match cell {
            Cell::Value(v) => {
                for (a, z) in out.amplitudes.iter_mut().zip(v) {
                    a[k] = z;
                }
            }
            Cell::Zero => {}
            Cell::Forbidden => out.meta.forbidden_points += 1,
            Cell::Singular => out.meta.singular_points += 1,
        }
    }
    Ok(out)
}

/// cw channel amplitudes at a single signal frequency.
pub fn cw_point(
    stack: &Stack,
    pump: &PumpSpec,
    geometry: &EmissionGeometry,
    omega_s: f64,
) -> Result<PointAmplitude> {
    if pump.kind != PumpKind::Cw {
        return Err(Error::Misuse("cw_point needs a cw pump".into()));
    }
    let model = SpdcModel::new(stack, *pump, *geometry)?;
    model.point(omega_s, pump.omega0 - omega_s, C64::new(pump.amplitude, 0.0))
}
