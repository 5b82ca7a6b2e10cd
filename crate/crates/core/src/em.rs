//! Plane-wave transfer matrices for layered stacks.
//!
//! Amplitudes are `(forward, backward)` pairs. Forward waves travel toward
//! `+z` as `exp(i k_z (z - z_ref))`, backward waves as `exp(-i k_z (z - z_ref))`.
//! The reference plane `z_ref` is the left edge of a layer, `z_0` for the left
//! ambient medium and `z_N` for the right one.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::Stack;
use crate::units::vacuum_wavenumber;

pub type C64 = Complex64;

/// Below this modulus a structure-matrix element counts as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;
/// Below this `|cos theta|` propagation is grazing and rejected.
pub const GRAZING_THRESHOLD: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "TM")]
    Tm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Te, Polarization::Tm];

    pub fn index(self) -> usize {
        match self {
            Polarization::Te => 0,
            Polarization::Tm => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Pump,
    Signal,
    Idler,
}

/// Propagation direction inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Backward];

    pub fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortMatrix(pub [[C64; 2]; 2]);

impl TwoPortMatrix {
    pub fn identity() -> Self {
        TwoPortMatrix([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        TwoPortMatrix([[m11, m12], [m21, m22]])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        TwoPortMatrix([[a, ZERO], [ZERO, b]])
    }

    pub fn m11(&self) -> C64 {
        self.0[0][0]
    }
    pub fn m12(&self) -> C64 {
        self.0[0][1]
    }
    pub fn m21(&self) -> C64 {
        self.0[1][0]
    }
    pub fn m22(&self) -> C64 {
        self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m11() * self.m22() - self.m12() * self.m21()
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() < SINGULAR_THRESHOLD {
            return None;
        }
        Some(TwoPortMatrix::new(
            self.m22() / d,
            -self.m12() / d,
            -self.m21() / d,
            self.m11() / d,
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        m
    }
}

impl Mul for TwoPortMatrix {
    type Output = TwoPortMatrix;

    fn mul(self, rhs: TwoPortMatrix) -> TwoPortMatrix {
        let a = &self.0;
        let b = &rhs.0;
        TwoPortMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Propagation angles of one field at one frequency in every region `0..=N+1`.
///
/// The Snell invariant `n sin(theta)` is real; regions where it exceeds the
/// local index carry the evanescent branch `cos(theta) = +i sqrt(sin^2 - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    pub omega: f64,
    pub field: Field,
    /// `n^{(l)} sin(theta^{(l)})`, common to all regions.
    pub invariant: f64,
    pub n: Vec<f64>,
    pub cos: Vec<C64>,
    /// `k_z^{(l)} = (omega / c) n^{(l)} cos(theta^{(l)})`, rad/nm.
    pub kz: Vec<C64>,
}

impl AngleSet {
    /// Builds the chain from precomputed region indices and the invariant.
    pub fn from_invariant(n: Vec<f64>, omega: f64, invariant: f64, field: Field) -> AngleSet {
        let k0 = vacuum_wavenumber(omega);
        let cos: Vec<C64> = n.iter().map(|&nl| cos_branch(invariant / nl)).collect();
        let kz = n.iter().zip(&cos).map(|(&nl, &c)| c * (k0 * nl)).collect();
        AngleSet {
            omega,
            field,
            invariant,
            n,
            cos,
            kz,
        }
    }

    pub fn regions(&self) -> usize {
        self.n.len()
    }

    pub fn sin(&self, region: usize) -> f64 {
        self.invariant / self.n[region]
    }

    /// Complex angle of region `region` consistent with [`AngleSet::cos`].
    pub fn theta(&self, region: usize) -> C64 {
        let s = self.sin(region);
        if s.abs() <= 1.0 {
            C64::new(s.asin(), 0.0)
        } else {
            let y = s.abs().acosh();
            if s > 0.0 {
                C64::new(std::f64::consts::FRAC_PI_2, -y)
            } else {
                C64::new(-std::f64::consts::FRAC_PI_2, y)
            }
        }
    }

    pub fn is_propagating(&self, region: usize) -> bool {
        self.sin(region).abs() < 1.0
    }

    fn check_grazing(&self, region: usize) -> Result<()> {
        let c = self.cos[region].norm();
        if c < GRAZING_THRESHOLD {
            return Err(Error::DegenerateAngle {
                region,
                cos_abs: c,
            });
        }
        Ok(())
    }
}

/// `cos(theta)` for `sin(theta) = s`, with the decaying-forward branch when `|s| > 1`.
fn cos_branch(s: f64) -> C64 {
    let d = 1.0 - s * s;
    if d >= 0.0 {
        C64::new(d.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-d).sqrt())
    }
}

/// Snell chain for incidence angle `theta_in` in the left ambient medium.
pub fn snell_chain(stack: &Stack, omega: f64, theta_in: f64, field: Field) -> Result<AngleSet> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Misuse(format!("nonpositive angular frequency {omega}")));
    }
    if !(theta_in.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Misuse(format!(
            "incidence angle {theta_in} rad outside (-pi/2, pi/2)"
        )));
    }
    let n = stack.indices(omega)?;
    let invariant = n[0] * theta_in.sin();
    Ok(AngleSet::from_invariant(n, omega, invariant, field))
}

/// Boundary matrix between region `l` and region `l + 1`.
pub fn boundary_matrix(l: usize, pol: Polarization, angles: &AngleSet) -> Result<TwoPortMatrix> {
    angles.check_grazing(l + 1)?;
    let f = angles.cos[l] / angles.cos[l + 1];
    let g = C64::new(angles.n[l] / angles.n[l + 1], 0.0);
    let half = 0.5;
    Ok(match pol {
        Polarization::Te => {
            let fg = f * g;
            TwoPortMatrix::new(
                (ONE + fg) * half,
                (ONE - fg) * half,
                (ONE - fg) * half,
                (ONE + fg) * half,
            )
        }
        Polarization::Tm => TwoPortMatrix::new(
            (f + g) * half,
            (f - g) * half,
            (f - g) * half,
            (f + g) * half,
        ),
    })
}

/// Propagation across layer `l` (1-based).
pub fn propagation_matrix(l: usize, angles: &AngleSet, stack: &Stack) -> TwoPortMatrix {
    let phase = angles.kz[l] * stack.layers()[l - 1].thickness_nm;
    let e = (C64::i() * phase).exp();
    let e_inv = (-C64::i() * phase).exp();
    TwoPortMatrix::diag(e, e_inv)
}

/// Cascaded transfer matrices of one field/polarization through a stack.
///
/// `prefix[l - 1]` maps region-0 amplitudes to the amplitudes at the left
/// edge of layer `l`; `s` maps region 0 to region `N + 1`.
#[derive(Debug, Clone)]
pub struct TransferChain {
    pub pol: Polarization,
    pub prefix: Vec<TwoPortMatrix>,
    pub s: TwoPortMatrix,
}

impl TransferChain {
    pub fn new(stack: &Stack, angles: &AngleSet, pol: Polarization) -> Result<TransferChain> {
        let n = stack.layer_count();
        let mut prefix = Vec::with_capacity(n);
        let mut m = boundary_matrix(0, pol, angles)?;
        for l in 1..=n {
            prefix.push(m);
            m = boundary_matrix(l, pol, angles)? * propagation_matrix(l, angles, stack) * m;
        }
        Ok(TransferChain { pol, prefix, s: m })
    }

    /// Maps `(incident from left, incident from right)` to region-0 amplitudes.
    pub fn incidence_to_region0(&self) -> Result<TwoPortMatrix> {
        let s22 = self.s.m22();
        check_singular("S22", s22)?;
        Ok(TwoPortMatrix::new(ONE, ZERO, -self.s.m21() / s22, ONE / s22))
    }

    /// Maps `(right-exit forward, left-exit backward)` channel amplitudes to region-0 amplitudes.
    pub fn exit_to_region0(&self) -> Result<TwoPortMatrix> {
        let s11 = self.s.m11();
        check_singular("S11", s11)?;
        Ok(TwoPortMatrix::new(ONE / s11, -self.s.m12() / s11, ZERO, ONE))
    }

    /// Per-layer exit decomposition `D^{(l)}`, `l = 1..=N`.
    pub fn exit_decomposition(&self) -> Result<Vec<TwoPortMatrix>> {
        let base = self.exit_to_region0()?;
        Ok(self.prefix.iter().map(|q| *q * base).collect())
    }
}

fn check_singular(element: &'static str, z: C64) -> Result<()> {
    let modulus = z.norm();
    if !(modulus >= SINGULAR_THRESHOLD) {
        return Err(Error::SingularStructure { element, modulus });
    }
    Ok(())
}

pub fn structure_matrix(
    stack: &Stack,
    omega: f64,
    theta_in: f64,
    pol: Polarization,
    field: Field,
) -> Result<TwoPortMatrix> {
    let angles = snell_chain(stack, omega, theta_in, field)?;
    Ok(TransferChain::new(stack, &angles, pol)?.s)
}

/// Amplitude transmission and reflection for incidence from the left.
pub fn transmission_reflection(s: &TwoPortMatrix) -> Result<(C64, C64)> {
    let s22 = s.m22();
    check_singular("S22", s22)?;
    Ok((s.det() / s22, -s.m21() / s22))
}

/// Power transmittance and reflectance for incidence from the left.
pub fn transmittance_reflectance(
    stack: &Stack,
    omega: f64,
    theta_in: f64,
    pol: Polarization,
) -> Result<(f64, f64)> {
    let angles = snell_chain(stack, omega, theta_in, Field::Pump)?;
    let chain = TransferChain::new(stack, &angles, pol)?;
    let (t, r) = transmission_reflection(&chain.s)?;
    let last = angles.regions() - 1;
    // z-directed power flux of either polarization scales as Re(n cos theta) |A|^2,
    // so an evanescent exit region carries none.
    let ratio = (angles.cos[last] * angles.n[last]).re / (angles.cos[0] * angles.n[0]).re;
    let tt = t.norm_sqr() * ratio;
    Ok((tt, r.norm_sqr()))
}

/// Forward/backward amplitudes per region, each at the left edge of its region.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub omega: f64,
    pub pol: Polarization,
    /// Regions `0..=N+1`.
    pub amplitudes: Vec<[C64; 2]>,
}

impl FieldMap {
    /// Amplitudes at the left edge of layer `l` (1-based).
    pub fn layer(&self, l: usize) -> [C64; 2] {
        self.amplitudes[l]
    }

    pub fn max_forward_intensity(&self) -> f64 {
        let n = self.amplitudes.len();
        self.amplitudes[1..n - 1]
            .iter()
            .map(|a| a[0].norm_sqr())
            .fold(0.0, f64::max)
    }
}

/// Field map for a chain already built at the pump frequency.
pub fn field_map_from_chain(
    chain: &TransferChain,
    omega: f64,
    a_in_left: C64,
    a_in_right: C64,
) -> Result<FieldMap> {
    let region0 = chain.incidence_to_region0()?.apply([a_in_left, a_in_right]);
    let mut amplitudes = Vec::with_capacity(chain.prefix.len() + 2);
    amplitudes.push(region0);
    amplitudes.extend(chain.prefix.iter().map(|q| q.apply(region0)));
    amplitudes.push(chain.s.apply(region0));
    Ok(FieldMap {
        omega,
        pol: chain.pol,
        amplitudes,
    })
}

pub fn internal_pump_field(
    stack: &Stack,
    omega_p: f64,
    theta_p: f64,
    pol: Polarization,
    a_in_left: C64,
    a_in_right: C64,
) -> Result<FieldMap> {
    let angles = snell_chain(stack, omega_p, theta_p, Field::Pump)?;
    let chain = TransferChain::new(stack, &angles, pol)?;
    field_map_from_chain(&chain, omega_p, a_in_left, a_in_right)
}

/// `D^{(l)}` for layer `l` (1-based): columns are the right-exit forward and
/// left-exit backward channels, rows the internal forward/backward amplitudes.
pub fn exit_decomposition(
    stack: &Stack,
    omega: f64,
    theta_in: f64,
    pol: Polarization,
    field: Field,
    l: usize,
) -> Result<TwoPortMatrix> {
    if l == 0 || l > stack.layer_count() {
        return Err(Error::Misuse(format!(
            "layer index {l} outside 1..={}",
            stack.layer_count()
        )));
    }
    let angles = snell_chain(stack, omega, theta_in, field)?;
    let chain = TransferChain::new(stack, &angles, pol)?;
    Ok(chain.prefix[l - 1] * chain.exit_to_region0()?)
}

/// Locates the transmission maximum on the long-wavelength edge of a stop band.
///
/// Scans the normal-incidence TE transmittance on `[lo_nm, hi_nm]` with `steps`
/// samples, takes the deepest transmission minimum as the stop band and walks
/// toward longer wavelengths to the first local maximum, refined by
/// golden-section search.
pub fn band_edge_resonance(stack: &Stack, lo_nm: f64, hi_nm: f64, steps: usize) -> Result<f64> {
    if !(lo_nm < hi_nm) || steps < 8 {
        return Err(Error::InvalidGrid(format!(
            "resonance scan needs lo < hi and >= 8 steps (got {lo_nm}..{hi_nm}, {steps})"
        )));
    }
    let tr = |lam: f64| -> Result<f64> {
        let w = crate::units::omega_from_wavelength(lam);
        Ok(transmittance_reflectance(stack, w, 0.0, Polarization::Te)?.0)
    };
    let dl = (hi_nm - lo_nm) / (steps - 1) as f64;
    let lams: Vec<f64> = (0..steps).map(|i| lo_nm + dl * i as f64).collect();
    let t: Vec<f64> = lams.iter().map(|&l| tr(l)).collect::<Result<_>>()?;

    let mut i = (0..steps)
        .min_by(|&a, &b| t[a].total_cmp(&t[b]))
        .expect("nonempty scan");
    while i + 1 < steps && t[i + 1] >= t[i] {
        i += 1;
    }
    if i == 0 || i + 1 == steps {
        return Err(Error::InvalidGrid(
            "band-edge maximum not bracketed by the resonance scan window".into(),
        ));
    }
    golden_max(|x| tr(x).unwrap_or(0.0), lams[i] - dl, lams[i] + dl, 1e-6)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::Material;
    use crate::structure::Layer;
    use std::sync::Arc;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn half_space(n1: f64, n2: f64, thickness: f64) -> Stack {
        // A layer of the exit medium makes a single interface at z = 0.
        let m1 = Arc::new(Material::constant("a", n1));
        let m2 = Arc::new(Material::constant("b", n2));
        Stack::new(m1, vec![Layer::linear(m2.clone(), thickness)], m2, 0.0).unwrap()
    }

    #[test]
    fn homogeneous_snell_chain() {
        let s = half_space(1.0, 1.0, 10.0);
        let a = snell_chain(&s, 2.0, 0.3, Field::Signal).unwrap();
        for l in 0..a.regions() {
            assert!((a.theta(l).re - 0.3).abs() < 1e-15);
            assert_eq!(a.theta(l).im, 0.0);
        }
    }

    #[test]
    fn refraction_angle() {
        let s = half_space(1.0, 1.5, 10.0);
        let a = snell_chain(&s, 2.0, 30f64.to_radians(), Field::Signal).unwrap();
        let expected = (0.5f64 / 1.5).asin();
        assert!((a.theta(1).re - expected).abs() < 1e-14);
        assert!((a.theta(1).re.to_degrees() - 19.471_220_634).abs() < 1e-8);
    }

    #[test]
    fn total_internal_reflection_branch() {
        let s = half_space(1.5, 1.0, 10.0);
        let a = snell_chain(&s, 2.0, 60f64.to_radians(), Field::Signal).unwrap();
        assert!((a.sin(1) - 1.5 * 60f64.to_radians().sin()).abs() < 1e-15);
        assert!(a.sin(1).abs() > 1.299);
        assert!(a.cos[1].re == 0.0 && a.cos[1].im > 0.0);
        assert!(a.kz[1].im > 0.0);
        let th = a.theta(1);
        assert!((th.sin() - C64::new(a.sin(1), 0.0)).norm() < 1e-12);
        assert!((th.cos() - a.cos[1]).norm() < 1e-12);
    }

    #[test]
    fn boundary_matrix_hand_values() {
        let s = half_space(1.0, 2.0, 10.0);
        let a = snell_chain(&s, 2.0, 0.0, Field::Pump).unwrap();
        let t = boundary_matrix(0, Polarization::Te, &a).unwrap();
        let expected = TwoPortMatrix::new(
            C64::new(0.75, 0.0),
            C64::new(0.25, 0.0),
            C64::new(0.25, 0.0),
            C64::new(0.75, 0.0),
        );
        assert!(t.max_abs_diff(&expected) < 1e-15);
        // No interface between the layer and the identical exit medium.
        let id = boundary_matrix(1, Polarization::Tm, &a).unwrap();
        assert!(id.max_abs_diff(&TwoPortMatrix::identity()) < 1e-15);
    }

    #[test]
    fn grazing_rejected() {
        let s = half_space(2.0, 1.0, 10.0);
        // n0 sin(theta) = 1 exactly in the exit medium.
        let a = AngleSet::from_invariant(vec![2.0, 1.0, 1.0], 2.0, 1.0, Field::Signal);
        assert!(matches!(
            boundary_matrix(0, Polarization::Te, &a),
            Err(Error::DegenerateAngle { region: 1, .. })
        ));
        drop(s);
    }

    #[test]
    fn propagation_half_wave() {
        let m = Arc::new(Material::constant("u", 1.0));
        let w = 2.0;
        let k = vacuum_wavenumber(w);
        let s = Stack::in_vacuum(vec![Layer::linear(m, std::f64::consts::PI / k)]).unwrap();
        let a = snell_chain(&s, w, 0.0, Field::Pump).unwrap();
        let p = propagation_matrix(1, &a, &s);
        let minus = TwoPortMatrix::diag(C64::new(-1.0, 0.0), C64::new(-1.0, 0.0));
        assert!(p.max_abs_diff(&minus) < 1e-14);
        assert!((p.det().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_fresnel() {
        let (t, r) = transmission_reflection(&TwoPortMatrix::identity()).unwrap();
        assert_eq!((t, r), (ONE, ZERO));

        let s = half_space(1.0, 2.0, 10.0);
        let m = structure_matrix(&s, 2.0, 0.0, Polarization::Te, Field::Pump).unwrap();
        let (t, r) = transmission_reflection(&m).unwrap();
        // Phase accumulated in the exit-medium layer is removed before comparing.
        let kz = vacuum_wavenumber(2.0) * 2.0 * 10.0;
        let t0 = t * (-C64::i() * kz).exp();
        assert!(close(t0, C64::new(2.0 / 3.0, 0.0), 1e-12));
        assert!(close(r, C64::new(-1.0 / 3.0, 0.0), 1e-12));
    }

    #[test]
    fn singular_structure_reported() {
        let z = TwoPortMatrix::new(ONE, ZERO, ZERO, ZERO);
        assert!(matches!(
            transmission_reflection(&z),
            Err(Error::SingularStructure { element: "S22", .. })
        ));
    }

    #[test]
    fn uniform_medium_field_map() {
        let m = Arc::new(Material::vacuum());
        let s = Stack::in_vacuum(vec![Layer::linear(m.clone(), 100.0), Layer::linear(m, 37.0)])
            .unwrap();
        let f = internal_pump_field(&s, 2.5, 0.2, Polarization::Tm, ONE, ZERO).unwrap();
        for a in &f.amplitudes {
            assert!((a[0].norm() - 1.0).abs() < 1e-14);
            assert!(a[1].norm() < 1e-14);
        }
    }
}
