use std::sync::Arc;

use num_complex::Complex64 as C64;
use pbg_spdc::em::{
    band_edge_resonance, exit_decomposition, snell_chain, structure_matrix,
    transmission_reflection, transmittance_reflectance, Field, Polarization, TransferChain,
};
use pbg_spdc::materials::{load_materials, Material};
use pbg_spdc::structure::{load_stack, Layer, Stack};
use pbg_spdc::units::{omega_from_wavelength, vacuum_wavenumber};
use proptest::prelude::*;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn constant(n: f64) -> Arc<Material> {
    Arc::new(Material::constant(format!("n{n}"), n))
}

fn slab(n: f64, thickness: f64) -> Stack {
    Stack::in_vacuum(vec![Layer::linear(constant(n), thickness)]).unwrap()
}

fn cos_in(n0: f64, n1: f64, theta: f64) -> (f64, f64) {
    let s1 = n0 * theta.sin() / n1;
    (theta.cos(), (1.0 - s1 * s1).sqrt())
}

#[test]
fn single_interface_matches_fresnel() {
    let (n0, n1) = (1.0, 2.3);
    let omega = omega_from_wavelength(800.0);
    for theta in [0.0, 0.3, 0.7, 1.2] {
        // A layer whose index continues into the right half-space is a single interface.
        let m = constant(n1);
        let stack = Stack::new(
            constant(n0),
            vec![Layer::linear(m.clone(), 350.0)],
            m,
            0.0,
        )
        .unwrap();
        let (c0, c1) = cos_in(n0, n1, theta);
        let r_te = (n0 * c0 - n1 * c1) / (n0 * c0 + n1 * c1);
        let t_te = 2.0 * n0 * c0 / (n0 * c0 + n1 * c1);
        let r_tm = (n1 * c0 - n0 * c1) / (n1 * c0 + n0 * c1);

        let s = structure_matrix(&stack, omega, theta, Polarization::Te, Field::Pump).unwrap();
        let (t, r) = transmission_reflection(&s).unwrap();
        let phase = C64::from_polar(1.0, vacuum_wavenumber(omega) * n1 * c1 * 350.0);
        assert!((r - r_te).norm() < 1e-10, "TE r at {theta}");
        assert!((t - t_te * phase).norm() < 1e-10, "TE t at {theta}");

        let (tt, rr) = transmittance_reflectance(&stack, omega, theta, Polarization::Tm).unwrap();
        assert!((rr - r_tm * r_tm).abs() < 1e-10, "TM R at {theta}");
        assert!((tt - (1.0 - r_tm * r_tm)).abs() < 1e-10, "TM T at {theta}");
    }
}

#[test]
fn slab_matches_airy_formula() {
    let n = 2.1;
    let thickness = 517.0;
    for lambda in [500.0, 733.3, 1064.0, 1550.0] {
        for theta in [0.0, 0.25, 0.9] {
            let omega = omega_from_wavelength(lambda);
            let (c0, c1) = cos_in(1.0, n, theta);
            let delta = vacuum_wavenumber(omega) * n * c1 * thickness;
            for (pol, r) in [
                (Polarization::Te, (c0 - n * c1) / (c0 + n * c1)),
                (Polarization::Tm, (n * c0 - c1) / (n * c0 + c1)),
            ] {
                let big_r = r * r;
                let f = 4.0 * big_r / (1.0 - big_r).powi(2);
                let airy = 1.0 / (1.0 + f * delta.sin().powi(2));
                let (t, _) = transmittance_reflectance(&slab(n, thickness), omega, theta, pol).unwrap();
                assert!((t - airy).abs() < 1e-8, "{pol:?} {lambda} {theta}: {t} vs {airy}");
            }
        }
    }
}

#[test]
fn bundled_stack_band_edge() {
    let reg = load_materials(data("materials.json")).unwrap();
    let stack = load_stack(data("gan_aln_49.json"), &reg).unwrap();
    let lambda = band_edge_resonance(&stack, 600.0, 760.0, 801).unwrap();
    assert!((lambda - 664.5).abs() <= 15.0, "resonance at {lambda} nm");
    let (t, _) =
        transmittance_reflectance(&stack, omega_from_wavelength(lambda), 0.0, Polarization::Te)
            .unwrap();
    assert!(t > 0.5, "T = {t} at the resonance");
}

#[test]
fn exit_decomposition_of_one_layer() {
    // Each exit mode carries unit outgoing amplitude in its own channel and none
    // in the other.
    let stack = slab(1.8, 240.0);
    let omega = omega_from_wavelength(900.0);
    let theta = 0.4;
    for pol in Polarization::BOTH {
        let angles = snell_chain(&stack, omega, theta, Field::Signal).unwrap();
        let chain = TransferChain::new(&stack, &angles, pol).unwrap();
        let d = exit_decomposition(&stack, omega, theta, pol, Field::Signal, 1).unwrap();
        let region0 = chain.exit_to_region0().unwrap();
        let s = chain.s;
        let right = s * region0;
        assert!((right.m11() - 1.0).norm() < 1e-12);
        assert!(right.m12().norm() < 1e-12);
        assert!((region0.m22() - 1.0).norm() < 1e-12 && region0.m21().norm() < 1e-15);
        assert!(d.max_abs_diff(&(chain.prefix[0] * region0)) < 1e-15);
    }
}

fn stack_strategy() -> impl Strategy<Value = (Vec<(f64, f64)>, f64, f64)> {
    (
        prop::collection::vec((1.0f64..3.5, 10.0f64..600.0), 1..12),
        300.0f64..2000.0,
        0.0f64..1.3,
    )
}

fn build(layers: &[(f64, f64)]) -> Stack {
    Stack::in_vacuum(layers.iter().map(|&(n, d)| Layer::linear(constant(n), d)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lossless_stacks_conserve_flux((layers, lambda, theta) in stack_strategy()) {
        let stack = build(&layers);
        let omega = omega_from_wavelength(lambda);
        for pol in Polarization::BOTH {
            let (t, r) = transmittance_reflectance(&stack, omega, theta, pol).unwrap();
            prop_assert!((t + r - 1.0).abs() < 1e-10, "{pol:?}: T + R = {}", t + r);
        }
    }

    #[test]
    fn determinant_telescopes((layers, lambda, theta) in stack_strategy(), n_right in 1.0f64..3.0) {
        let left = constant(1.0);
        let stack = Stack::new(
            left,
            layers.iter().map(|&(n, d)| Layer::linear(constant(n), d)).collect(),
            constant(n_right),
            -120.0,
        ).unwrap();
        let omega = omega_from_wavelength(lambda);
        let (c0, c1) = cos_in(1.0, n_right, theta);
        let expected = c0 / (n_right * c1);
        for pol in Polarization::BOTH {
            let s = structure_matrix(&stack, omega, theta, pol, Field::Pump).unwrap();
            prop_assert!((s.det() - expected).norm() < 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn transmission_is_reciprocal((layers, lambda, theta) in stack_strategy()) {
        let forward = build(&layers);
        let reversed: Vec<(f64, f64)> = layers.iter().rev().copied().collect();
        let backward = build(&reversed);
        let omega = omega_from_wavelength(lambda);
        for pol in Polarization::BOTH {
            let sf = structure_matrix(&forward, omega, theta, pol, Field::Pump).unwrap();
            let sb = structure_matrix(&backward, omega, theta, pol, Field::Pump).unwrap();
            let (tf, _) = transmission_reflection(&sf).unwrap();
            let (tb, _) = transmission_reflection(&sb).unwrap();
            prop_assert!((tf - tb).norm() < 1e-10);
        }
    }

    #[test]
    fn splitting_a_layer_changes_nothing(n in 1.2f64..3.0, d in 50.0f64..900.0, frac in 0.05f64..0.95, lambda in 400.0f64..1600.0) {
        let m = constant(n);
        let whole = Stack::in_vacuum(vec![Layer::linear(m.clone(), d)]).unwrap();
        let split = Stack::in_vacuum(vec![
            Layer::linear(m.clone(), d * frac),
            Layer::linear(m, d * (1.0 - frac)),
        ]).unwrap();
        let omega = omega_from_wavelength(lambda);
        let a = structure_matrix(&whole, omega, 0.2, Polarization::Te, Field::Pump).unwrap();
        let b = structure_matrix(&split, omega, 0.2, Polarization::Te, Field::Pump).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }
}
