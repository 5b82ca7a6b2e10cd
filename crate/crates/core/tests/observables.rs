use std::sync::Arc;

use num_complex::Complex64 as C64;
use pbg_spdc::materials::{load_materials, Material};
use pbg_spdc::observables::*;
use pbg_spdc::pump::PumpSpec;
use pbg_spdc::spdc::{
    jsa, jsa_cw, Channel, EmissionGeometry, FrequencyGrid, JsaGrid, JsaMeta,
};
use pbg_spdc::structure::{load_stack, Chi2Tensor, Layer, Stack};
use pbg_spdc::units::wavelength_from_omega;
use pbg_spdc::Error;
use proptest::prelude::*;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn bundled() -> Stack {
    let reg = load_materials(data("materials.json")).unwrap();
    load_stack(data("gan_aln_49.json"), &reg).unwrap()
}

fn meta() -> JsaMeta {
    JsaMeta {
        stack_digest: String::new(),
        pump: PumpSpec::gaussian(700.0, 100.0),
        geometry: EmissionGeometry::te(0.0),
        forbidden_points: 0,
        singular_points: 0,
    }
}

/// Synthetic amplitude `f(i, j)` in every channel, scaled per channel.
fn synthetic(g: FrequencyGrid, f: impl Fn(usize, usize) -> C64) -> JsaGrid {
    let mut out = JsaGrid::zeros(g, g, meta());
    for (c, sheet) in out.sheets.iter_mut().enumerate() {
        for i in 0..g.len {
            for j in 0..g.len {
                sheet[i * g.len + j] = f(i, j) * (1.0 + 0.5 * c as f64);
            }
        }
    }
    out
}

fn rough(n: usize) -> impl Fn(usize, usize) -> C64 {
    move |i, j| {
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            return C64::new(0.0, 0.0);
        }
        let (x, y) = (i as f64, j as f64);
        C64::new((0.37 * x + 0.11 * y * y).sin() + 1.2, (0.23 * x * y).cos() - 0.4 * (0.5 * y).sin())
    }
}

#[test]
fn fft_matches_direct_transform() {
    let n = 32;
    let g = FrequencyGrid::centered(1.4, 0.05, n).unwrap();
    let jsa = synthetic(g, |i, j| {
        let (x, y) = (i as f64, j as f64);
        C64::new((0.3 * x - 0.2 * y).sin(), (0.17 * x * y).cos())
    });
    let consts = PhysicalConstants::default();
    let spec = TimeGridSpec {
        normalize: false,
        ..TimeGridSpec::default()
    };
    let fast = time_domain_tpa(&jsa, &spec, &consts).unwrap();
    let (ws0, wi0) = (0.5 * (g.start + g.stop()), 0.5 * (g.start + g.stop()));
    for ch in [Channel::FF, Channel::BB] {
        let direct = time_domain_tpa_direct(&jsa, ch, &fast.tau_s, &fast.tau_i, ws0, wi0, &consts);
        let max = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = direct
            .iter()
            .zip(fast.sheets[ch.index()].iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10 * max, "{worst} vs {max}");
    }
}

#[test]
fn normalized_amplitude_has_unit_probability() {
    let g = FrequencyGrid::centered(1.4, 0.05, 40).unwrap();
    let jsa = synthetic(g, rough(40));
    let tpa = time_domain_tpa(&jsa, &TimeGridSpec::default(), &PhysicalConstants::default()).unwrap();
    for p in tpa.total_probability() {
        assert!((p - 1.0).abs() < 1e-6);
    }
}

#[test]
fn gaussian_amplitude_transforms_to_gaussian() {
    let sigma = 0.005;
    let g = FrequencyGrid::centered(1.4, 8.0 * sigma, 65).unwrap();
    let c = 1.4;
    let jsa = synthetic(g, |i, j| {
        let (a, b) = (g.node(i) - c, g.node(j) - c);
        C64::new((-(a * a + b * b) / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    let spec = TimeGridSpec {
        pad: 16,
        ..TimeGridSpec::default()
    };
    let tpa = time_domain_tpa(&jsa, &spec, &PhysicalConstants::default()).unwrap();
    let mid = tpa.tau_i.iter().position(|&t| t == 0.0).unwrap();
    let cut: Vec<f64> = (0..tpa.tau_s.len())
        .map(|i| tpa.at(Channel::FF, i, mid).norm_sqr())
        .collect();
    let expected = 2.0 * 2f64.ln().sqrt() / sigma;
    let width = fwhm(&tpa.tau_s, &cut).unwrap();
    assert!((width / expected - 1.0).abs() < 1e-2, "{width} vs {expected}");
}

#[test]
fn hom_time_and_frequency_forms_agree() {
    let n = 32;
    let g = FrequencyGrid::centered(1.4, 0.04, n).unwrap();
    let jsa = synthetic(g, rough(n));
    let consts = PhysicalConstants::default();
    let w0 = 0.5 * (g.start + g.stop());
    let m = 64;
    let dt = 2.0 * std::f64::consts::PI / (m as f64 * g.step);
    let times: Vec<f64> = (0..m).map(|k| (k as f64 - (m / 2) as f64) * dt).collect();
    let delays = [0.0, 0.7 * dt, -3.3 * dt, 11.0 * dt, 140.0];
    let scan = hom_scan(&jsa, &delays, 1.0).unwrap();
    for ch in [Channel::FF, Channel::FB] {
        let plain = time_domain_tpa_direct(&jsa, ch, &times, &times, w0, w0, &consts);
        let r0: f64 = plain.iter().map(|z| z.norm_sqr()).sum();
        for (k, &tau) in delays.iter().enumerate() {
            let shifted: Vec<f64> = times.iter().map(|t| t - tau).collect();
            let x = time_domain_tpa_direct(&jsa, ch, &times, &shifted, w0, w0, &consts);
            let mut acc = 0.0;
            for a in 0..m {
                for b in 0..m {
                    acc += (x[a * m + b] * x[b * m + a].conj()).re;
                }
            }
            let rn = 1.0 - acc / r0;
            let got = scan.channel(ch)[k];
            assert!((rn - got).abs() < 1e-6, "{} tau={tau}: {rn} vs {got}", ch.label());
        }
    }
}

#[test]
fn symmetric_real_amplitude_has_full_dip() {
    let n = 64;
    let g = FrequencyGrid::centered(1.4, 0.05, n).unwrap();
    let jsa = synthetic(g, |i, j| {
        let (a, b) = (g.node(i) - 1.4, g.node(j) - 1.4);
        C64::new((-(a + b).powi(2) / 2e-4 - (a - b).powi(2) / 4e-3).exp(), 0.0)
    });
    let tau = delay_grid(3000.0, 601);
    let scan = hom_scan(&jsa, &tau, DIP_WINDOW).unwrap();
    for ch in Channel::ALL {
        let rn = scan.channel(ch);
        assert!(rn[300].abs() < 1e-6);
        assert!((rn[0] - 1.0).abs() < 0.02 && (rn[600] - 1.0).abs() < 0.02);
        let stats = scan.stats[ch.index()].unwrap();
        assert!(stats.center.abs() < 1e-9);
        assert!((stats.visibility - 1.0).abs() < 1e-6);
    }
}

#[test]
fn hom_needs_square_grid() {
    let gs = FrequencyGrid::centered(1.4, 0.05, 8).unwrap();
    let gi = FrequencyGrid::centered(1.41, 0.05, 8).unwrap();
    let jsa = JsaGrid::zeros(gs, gi, meta());
    assert!(matches!(hom_scan(&jsa, &[0.0], 0.5), Err(Error::InvalidGrid(_))));
}

#[test]
fn cw_degenerate_normal_emission_has_full_dip() {
    let stack = bundled();
    let pump = PumpSpec::cw(677.5);
    let g = FrequencyGrid::centered(pump.omega0 / 2.0, 0.05, 101).unwrap();
    let cw = jsa_cw(&stack, &pump, &EmissionGeometry::te(0.0), g).unwrap();
    let scan = hom_scan_cw(&cw, &[0.0, 500.0], DIP_WINDOW).unwrap();
    assert!(scan.channel(Channel::FF)[0].abs() < 1e-9);
    assert!(scan.channel(Channel::BB)[0].abs() < 1e-9);
    let shifted = FrequencyGrid::new(g.start, g.stop() - 0.01, 101).unwrap();
    let cw = jsa_cw(&stack, &pump, &EmissionGeometry::te(0.0), shifted).unwrap();
    assert!(hom_scan_cw(&cw, &[0.0], DIP_WINDOW).is_err());
}

#[test]
fn time_integrated_flux_matches_spectrum() {
    let n = 40;
    let g = FrequencyGrid::centered(1.4, 0.05, n).unwrap();
    let jsa = synthetic(g, rough(n));
    let consts = PhysicalConstants {
        hbar: 0.7,
        ..PhysicalConstants::default()
    };
    let m = 64;
    let dt = 2.0 * std::f64::consts::PI / (m as f64 * g.step);
    let tau: Vec<f64> = (0..m).map(|k| k as f64 * dt - 300.0).collect();
    let flux = photon_flux(&jsa, &tau, &consts).unwrap();
    let spectrum = signal_spectrum(&jsa, &consts);
    for ch in Channel::ALL {
        let timed: f64 = flux.channel(ch).iter().sum::<f64>() * dt;
        let energy: f64 = (0..n).map(|i| g.weight(i) * spectrum.channel(ch)[i]).sum();
        assert!((timed / (0.25 * energy) - 1.0).abs() < 1e-10, "{timed} vs {energy}");
    }
}

#[test]
fn narrow_idler_flux_approximates_full_flux() {
    let n = 96;
    let g = FrequencyGrid::centered(1.4, 0.04, n).unwrap();
    let jsa = synthetic(g, |i, j| {
        let (a, b) = (g.node(i) - 1.4, g.node(j) - 1.4);
        C64::from_polar((-(a * a) / 1e-4 - b * b / 2e-5).exp(), 300.0 * a)
    });
    let consts = PhysicalConstants::default();
    let narrow = photon_flux_narrow(&jsa, 2, 1.4, 1.4, &consts).unwrap();
    let full = photon_flux(&jsa, &narrow.tau, &consts).unwrap();
    let peak = full.channel(Channel::FF).iter().cloned().fold(0.0, f64::max);
    for (a, b) in narrow.channel(Channel::FF).iter().zip(full.channel(Channel::FF)) {
        assert!((a - b).abs() < 5e-3 * peak);
    }
    let (na, fa) = (narrow.stats[0].unwrap(), full.stats[0].unwrap());
    assert!((na.delay - 300.0).abs() < 20.0 && (fa.delay - 300.0).abs() < 20.0);
}

#[test]
fn pair_number_identities() {
    let n = 24;
    let g = FrequencyGrid::centered(1.4, 0.03, n).unwrap();
    let jsa = synthetic(g, rough(n));
    let total = total_pairs(&jsa);
    let doubled = total_pairs(&jsa.scaled(2.0));
    for ch in Channel::ALL {
        let cells: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| cell_photon_number(&jsa, ch, i, j))
            .sum();
        assert!((cells / total[ch.index()] - 1.0).abs() < 1e-12);
        assert!((doubled[ch.index()] / total[ch.index()] - 4.0).abs() < 1e-12);
    }
    let zero = JsaGrid::zeros(g, g, meta());
    assert_eq!(total_pairs(&zero), [0.0; 4]);

    let (ws, wi) = (g.node(5), g.node(9));
    let (v, snapped) = joint_photon_number(&jsa, Channel::FB, ws, wi, 1e-3, 2e-3, true).unwrap();
    assert!(!snapped);
    assert!((v - jsa.at(Channel::FB, 5, 9).norm_sqr() * 2e-6).abs() < 1e-18);
    let off = ws + 0.3 * g.step;
    assert!(matches!(
        joint_photon_number(&jsa, Channel::FB, off, wi, 1e-3, 2e-3, true),
        Err(Error::OffGrid { .. })
    ));
    let (w, snapped) = joint_photon_number(&jsa, Channel::FB, off, wi, 1e-3, 2e-3, false).unwrap();
    assert!(snapped && w == v);

    let mut single = JsaGrid::zeros(g, g, meta());
    single.sheets[0][7 * n + 11] = C64::new(3.0, 4.0);
    let marginal = marginal_signal_number(&single, Channel::FF, g.node(7), 0.5);
    assert!((marginal - 25.0 * g.weight(11) * 0.5).abs() < 1e-14);
}

#[test]
fn spectra_combine_exit_channels() {
    let n = 24;
    let g = FrequencyGrid::centered(1.4, 0.03, n).unwrap();
    let jsa = synthetic(g, rough(n));
    let consts = PhysicalConstants::default();
    let s = signal_spectrum(&jsa, &consts);
    let i = idler_spectrum(&jsa, &consts);
    for k in 0..n {
        assert!(s.channels.iter().all(|c| c[k] >= 0.0));
        assert_eq!(s.forward[k], s.channels[0][k] + s.channels[1][k]);
        assert_eq!(s.backward[k], s.channels[2][k] + s.channels[3][k]);
        assert_eq!(i.forward[k], i.channels[0][k] + i.channels[2][k]);
        assert_eq!(i.backward[k], i.channels[1][k] + i.channels[3][k]);
        assert!((s.wavelength_nm[k] - wavelength_from_omega(g.node(k))).abs() < 1e-12);
    }
    // A flat rectangle gives S proportional to omega.
    let flat = synthetic(g, |_, _| C64::new(1.0, 0.0));
    let s = signal_spectrum(&flat, &consts);
    let ratio = s.channels[0][0] / g.node(0);
    for k in 0..n {
        assert!((s.channels[0][k] / g.node(k) / ratio - 1.0).abs() < 1e-12);
    }
    assert!(s.stats[0].unwrap().fwhm_nm.unwrap() >= wavelength_from_omega(g.start) - wavelength_from_omega(g.stop()) - 1e-9);
}

#[test]
fn marginal_converges_on_bundled_stack() {
    let stack = bundled();
    let pump = PumpSpec::gaussian(677.5, 200.0);
    let w0 = pump.omega0 / 2.0;
    let geometry = EmissionGeometry::te(14f64.to_radians());
    let value = |len: usize| {
        let g = FrequencyGrid::centered(w0, 0.05, len).unwrap();
        let out = jsa(&stack, &pump, &geometry, g, g).unwrap();
        marginal_signal_number(&out, Channel::FF, w0, 1e-3)
    };
    let (coarse, fine) = (value(101), value(201));
    assert!((coarse / fine - 1.0).abs() < 5e-3, "{coarse} vs {fine}");
}

fn matched_layer_stack(lambda_p: f64, periods: f64, d: f64) -> Stack {
    let vacuum_like = Arc::new(Material::constant("index-one", 1.0));
    Stack::in_vacuum(vec![Layer::new(vacuum_like, periods * lambda_p, Chi2Tensor::te_scalar(d))]).unwrap()
}

#[test]
fn ideal_structure_has_unit_efficiency() {
    let pump = PumpSpec::cw(700.0);
    let stack = matched_layer_stack(700.0, 3.0, 7.5);
    let w = pump.omega0 / 2.0;
    for factor in [RefFrequencyFactor::AsWritten, RefFrequencyFactor::Idler] {
        let report =
            efficiency_cw_point(&stack, &pump, &EmissionGeometry::te(0.0), w, factor).unwrap();
        assert!((report.total - 1.0).abs() < 1e-10, "{report:?}");
        assert!((report.channel(Channel::FF) - 1.0).abs() < 1e-10);
    }

    let g = FrequencyGrid::centered(w, 0.02, 21).unwrap();
    let cw = jsa_cw(&stack, &pump, &EmissionGeometry::te(0.0), g).unwrap();
    let reference = reference_cw(&stack, &pump, g, RefFrequencyFactor::AsWritten).unwrap();
    let report = relative_efficiency_cw(&cw, &reference, w).unwrap();
    assert!((report.total - 1.0).abs() < 1e-10);

    // Pulsed: the forward pair is phase matched at every frequency pair.
    let pulsed = PumpSpec::gaussian(700.0, 150.0);
    let out = jsa(&stack, &pulsed, &EmissionGeometry::te(0.0), g, g).unwrap();
    let reference = reference_jsa(&stack, &pulsed, g, g, RefFrequencyFactor::Idler).unwrap();
    for k in [3, 10, 17] {
        let report = relative_efficiency(&out, &reference, g.node(k)).unwrap();
        assert!((report.channel(Channel::FF) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reference_depends_only_on_coupling_sum() {
    let pump = PumpSpec::gaussian(700.0, 150.0);
    let g = FrequencyGrid::centered(pump.omega0 / 2.0, 0.02, 9).unwrap();
    let a = matched_layer_stack(700.0, 3.0, 6.0);
    let gan = Arc::new(Material::constant("high", 2.4));
    let b = Stack::in_vacuum(vec![
        Layer::new(gan.clone(), 700.0, Chi2Tensor::te_scalar(-9.0)),
        Layer::linear(gan.clone(), 300.0),
        Layer::new(gan, 1400.0, Chi2Tensor::te_scalar(4.5)),
    ])
    .unwrap();
    let ra = reference_jsa(&a, &pump, g, g, RefFrequencyFactor::AsWritten).unwrap();
    let rb = reference_jsa(&b, &pump, g, g, RefFrequencyFactor::AsWritten).unwrap();
    for (x, y) in ra.sheets[0].iter().zip(&rb.sheets[0]) {
        assert!((x - y).norm() <= 1e-12 * x.norm());
    }
    let linear = a.with_scaled_nonlinearity(0.0);
    let zero = reference_jsa(&linear, &pump, g, g, RefFrequencyFactor::AsWritten).unwrap();
    assert!(zero.sheets[0].iter().all(|z| z.norm() == 0.0));
    let out = jsa(&linear, &pump, &EmissionGeometry::te(0.0), g, g).unwrap();
    assert!(matches!(
        relative_efficiency(&out, &zero, g.node(4)),
        Err(Error::UndefinedEfficiency { .. })
    ));
}

#[test]
fn efficiency_ignores_pump_strength() {
    let stack = bundled();
    let base = PumpSpec::gaussian(677.5, 200.0);
    let strong = PumpSpec { amplitude: 37.0, ..base };
    let w = base.omega0 / 2.0;
    let g = FrequencyGrid::centered(w, 0.02, 21).unwrap();
    let geometry = EmissionGeometry::te(0.24);
    let eta = |pump: &PumpSpec| {
        let out = jsa(&stack, pump, &geometry, g, g).unwrap();
        let reference = reference_jsa(&stack, pump, g, g, RefFrequencyFactor::AsWritten).unwrap();
        relative_efficiency(&out, &reference, w).unwrap()
    };
    let (a, b) = (eta(&base), eta(&strong));
    for k in 0..4 {
        assert!((a.channels[k] - b.channels[k]).abs() <= 1e-12 * a.channels[k]);
    }

    let cw = PumpSpec::cw(677.5);
    let a = efficiency_cw_point(&stack, &cw, &geometry, w, RefFrequencyFactor::AsWritten).unwrap();
    let b = efficiency_cw_point(
        &stack,
        &PumpSpec { amplitude: 0.01, ..cw },
        &geometry,
        w,
        RefFrequencyFactor::AsWritten,
    )
    .unwrap();
    assert!((a.total - b.total).abs() <= 1e-12 * a.total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hom_rate_stays_within_bounds(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        tau in prop::collection::vec(-2000.0f64..2000.0, 1..20),
    ) {
        let g = FrequencyGrid::centered(1.4, 0.02, 8).unwrap();
        let jsa = synthetic(g, |i, j| C64::new(values[i * 8 + j].0, values[i * 8 + j].1));
        let scan = hom_scan(&jsa, &tau, 1.0).unwrap();
        for ch in Channel::ALL {
            for &r in scan.channel(ch) {
                prop_assert!((-1e-12..=2.0 + 1e-12).contains(&r));
            }
        }
    }

    #[test]
    fn spectra_are_nonnegative(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36)) {
        let g = FrequencyGrid::centered(1.4, 0.02, 6).unwrap();
        let jsa = synthetic(g, |i, j| C64::new(values[i * 6 + j].0, values[i * 6 + j].1));
        let s = signal_spectrum(&jsa, &PhysicalConstants::default());
        prop_assert!(s.channels.iter().flatten().all(|&v| v >= 0.0));
    }
}

#[test]
fn cw_two_photon_amplitude_depends_on_delay_difference() {
    let stack = bundled();
    let pump = PumpSpec::cw(677.5);
    let g = FrequencyGrid::centered(pump.omega0 / 2.0, 0.05, 61).unwrap();
    let cw = jsa_cw(&stack, &pump, &EmissionGeometry::te(0.24), g).unwrap();
    let tau: Vec<f64> = (0..9).map(|k| -200.0 + 50.0 * k as f64).collect();
    let tpa = time_domain_cw(&cw, &tau, &tau, &PhysicalConstants::default()).unwrap();
    let peak = tpa.sheets[0].iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    assert!(peak > 0.0);
    for a in 1..tau.len() {
        for b in 1..tau.len() {
            let here = tpa.at(Channel::FF, a, b).norm_sqr();
            let shifted = tpa.at(Channel::FF, a - 1, b - 1).norm_sqr();
            assert!((here - shifted).abs() < 1e-10 * peak);
        }
    }
}
