use pbg_spdc::em::{transmittance_reflectance, Polarization};
use pbg_spdc::observables::{
    efficiency_cw_point, hom_scan, hom_scan_cw, photon_flux, pulse_stats, reference_jsa,
    relative_efficiency, signal_spectrum, signal_spectrum_cw, time_domain_cw, time_domain_tpa,
    EfficiencyReport, HomScan, PhysicalConstants, SpectrumResult, TimeDomainTpa, TimeGridSpec,
};
use pbg_spdc::spdc::{jsa, jsa_cw, Channel, CwJsa, FrequencyGrid, JsaGrid};
use pbg_spdc::units::{omega_from_wavelength, wavelength_from_omega};
use rayon::prelude::*;

use crate::config::{OmegaNorm, Run};
use crate::error::CliError;
use crate::output::{angle_tag, encode_cw, encode_jsa, Sink, Table};

const CHANNELS: [&str; 4] = ["FF", "FB", "BF", "BB"];

fn columns(prefix: &str) -> Vec<String> {
    CHANNELS.iter().map(|c| format!("{prefix}_{c}")).collect()
}

fn header<'a>(lead: &[&'a str], rest: &'a [String], tail: &[&'a str]) -> Vec<&'a str> {
    lead.iter()
        .copied()
        .chain(rest.iter().map(String::as_str))
        .chain(tail.iter().copied())
        .collect()
}

/// Maps `f` over the sweep angles in parallel, keeping declaration order.
fn sweep<T: Send>(
    run: &Run,
    f: impl Fn(f64) -> Result<T, CliError> + Sync,
) -> Result<Vec<(f64, T)>, CliError> {
    run.thetas_deg
        .par_iter()
        .map(|&t| f(t).map(|v| (t, v)))
        .collect()
}

enum Amplitude {
    Pulsed(JsaGrid),
    Cw(CwJsa),
}

fn amplitude(run: &Run, theta_deg: f64) -> Result<Amplitude, CliError> {
    let geometry = run.geometry(theta_deg);
    let gs = run.signal_grid()?;
    Ok(if run.is_cw() {
        Amplitude::Cw(jsa_cw(&run.stack, &run.pump, &geometry, gs)?)
    } else {
        Amplitude::Pulsed(jsa(
            &run.stack,
            &run.pump,
            &geometry,
            gs,
            run.idler_grid()?,
        )?)
    })
}

pub fn validate(run: &Run) -> Result<(), CliError> {
    let s = &run.stack;
    println!(
        "stack: N={} layers ({} nonlinear), total {} nm",
        s.layer_count(),
        s.nonlinear_layer_count(),
        s.total_thickness_nm()
    );
    println!("stack_sha256: {}", run.stack_digest);
    match run.resonance_nm {
        Some(r) => println!("pump: {:?}, {r:.3} nm (band-edge resonance)", run.pump.kind),
        None => println!("pump: {:?}, {} nm", run.pump.kind, run.pump_wavelength_nm()),
    }
    println!("sweep: {} signal angle(s)", run.thetas_deg.len());
    run.signal_grid()?;
    Ok(())
}

pub fn transmission(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    let t = &run.config.transmission;
    if t.points < 2 || !(t.lambda_start_nm > 0.0 && t.lambda_stop_nm > t.lambda_start_nm) {
        return Err(CliError::Config(
            "transmission needs 0 < lambda_start_nm < lambda_stop_nm and points >= 2".into(),
        ));
    }
    let reference = match t.omega_norm {
        OmegaNorm::Pump => run.pump.omega0,
        OmegaNorm::HalfPump => 0.5 * run.pump.omega0,
    };
    let lambdas: Vec<f64> = (0..t.points)
        .map(|k| {
            t.lambda_start_nm
                + (t.lambda_stop_nm - t.lambda_start_nm) * k as f64 / (t.points - 1) as f64
        })
        .collect();
    let blocks = sweep(run, |theta| {
        lambdas
            .par_iter()
            .map(|&lam| {
                let w = omega_from_wavelength(lam);
                let (tte, rte) =
                    transmittance_reflectance(&run.stack, w, theta.to_radians(), Polarization::Te)?;
                let (ttm, rtm) =
                    transmittance_reflectance(&run.stack, w, theta.to_radians(), Polarization::Tm)?;
                Ok(vec![theta, lam, w / reference, tte, rte, ttm, rtm])
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut table = Table::new(&[
        "theta_deg",
        "lambda_nm",
        "omega_norm",
        "T_TE",
        "R_TE",
        "T_TM",
        "R_TM",
    ]);
    for (_, rows) in blocks {
        table.extend(rows);
    }
    sink.csv("transmission.csv", &table)
}

pub fn jsa_files(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    let results = sweep(run, |t| amplitude(run, t))?;
    let marg = columns("P");
    let mut table = Table::new(&header(&["theta_deg", "omega_s", "lambda_nm"], &marg, &[]));
    for (theta, amp) in &results {
        let name = format!("jsa_theta_{}.bin", angle_tag(*theta));
        match amp {
            Amplitude::Pulsed(g) => {
                sink.bytes(&name, &encode_jsa(g))?;
                for i in 0..g.omega_s.len {
                    let w = g.omega_s.node(i);
                    let mut row = vec![*theta, w, wavelength_from_omega(w)];
                    row.extend(Channel::ALL.map(|ch| {
                        (0..g.omega_i.len)
                            .map(|j| g.at(ch, i, j).norm_sqr() * g.omega_i.weight(j))
                            .sum::<f64>()
                    }));
                    table.row(&row);
                }
            }
            Amplitude::Cw(c) => {
                sink.bytes(&name, &encode_cw(c))?;
                for k in 0..c.omega_s.len {
                    let w = c.omega_s.node(k);
                    let mut row = vec![*theta, w, wavelength_from_omega(w)];
                    row.extend(Channel::ALL.map(|ch| c.at(ch, k).norm_sqr()));
                    table.row(&row);
                }
            }
        }
    }
    sink.csv("jsa_marginals.csv", &table)
}

pub fn spectrum(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    let consts = PhysicalConstants::default();
    let results: Vec<(f64, SpectrumResult)> = sweep(run, |t| {
        Ok(match amplitude(run, t)? {
            Amplitude::Pulsed(g) => signal_spectrum(&g, &consts),
            Amplitude::Cw(c) => signal_spectrum_cw(&c, &consts),
        })
    })?;
    let s = columns("S");
    let mut table = Table::new(&header(&["theta_deg", "lambda_nm"], &s, &["S_sF", "S_sB"]));
    let stat_cols: Vec<String> = CHANNELS
        .iter()
        .flat_map(|c| [format!("peak_nm_{c}"), format!("fwhm_nm_{c}")])
        .collect();
    let mut stats = Table::new(&header(&["theta_deg"], &stat_cols, &[]));
    for (theta, sp) in &results {
        for k in 0..sp.omega.len() {
            let mut row = vec![*theta, sp.wavelength_nm[k]];
            row.extend(sp.channels.iter().map(|c| c[k]));
            row.push(sp.forward[k]);
            row.push(sp.backward[k]);
            table.row(&row);
        }
        let mut row = vec![Some(*theta)];
        for st in &sp.stats {
            row.push(st.map(|p| p.wavelength_nm));
            row.push(st.and_then(|p| p.fwhm_nm));
        }
        stats.row_opt(&row);
    }
    sink.csv("spectrum.csv", &table)?;
    sink.csv("spectrum_stats.csv", &stats)
}

pub fn time_map(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    let consts = PhysicalConstants::default();
    let g = &run.config.grid;
    let delays = run.delays()?;
    let results: Vec<(f64, TimeDomainTpa)> = sweep(run, |t| {
        Ok(match amplitude(run, t)? {
            Amplitude::Pulsed(j) => {
                let spec = TimeGridSpec {
                    pad: g.pad,
                    crop_fs: Some(g.tau_half_span_fs),
                    ..TimeGridSpec::default()
                };
                time_domain_tpa(&j, &spec, &consts)?
            }
            Amplitude::Cw(c) => time_domain_cw(&c, &delays, &delays, &consts)?,
        })
    })?;
    let p = columns("P");
    let cw = run.is_cw();
    for (theta, tpa) in &results {
        let mut table = Table::new(&header(&["tau_s_fs", "tau_i_fs"], &p, &[]));
        let peaks = tpa
            .sheets
            .clone()
            .map(|s| s.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max));
        let ni = tpa.tau_i.len();
        for (a, &ts) in tpa.tau_s.iter().enumerate() {
            for (b, &ti) in tpa.tau_i.iter().enumerate() {
                let mut row = vec![ts, ti];
                for (c, sheet) in tpa.sheets.iter().enumerate() {
                    let v = sheet[a * ni + b].norm_sqr();
                    row.push(if cw && peaks[c] > 0.0 {
                        v / peaks[c]
                    } else {
                        v
                    });
                }
                table.row(&row);
            }
        }
        sink.csv(&format!("time_map_theta_{}.csv", angle_tag(*theta)), &table)?;
    }
    Ok(())
}

pub fn flux(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    run.require_pulsed("flux")?;
    let consts = PhysicalConstants::default();
    let delays = run.delays()?;
    let results = sweep(run, |t| match amplitude(run, t)? {
        Amplitude::Pulsed(j) => Ok(photon_flux(&j, &delays, &consts)?),
        Amplitude::Cw(_) => unreachable!("checked above"),
    })?;
    let n = columns("N");
    let mut table = Table::new(&header(&["theta_deg", "tau_fs"], &n, &["N_sF", "N_sB"]));
    let stat_cols: Vec<String> = CHANNELS
        .iter()
        .chain(&["sF", "sB"])
        .flat_map(|c| [format!("delay_fs_{c}"), format!("fwhm_fs_{c}")])
        .collect();
    let mut stats = Table::new(&header(&["theta_deg"], &stat_cols, &[]));
    for (theta, f) in &results {
        let sum = |a: usize, b: usize| -> Vec<f64> {
            f.channels[a]
                .iter()
                .zip(&f.channels[b])
                .map(|(x, y)| x + y)
                .collect()
        };
        let (sf, sb) = (sum(0, 1), sum(2, 3));
        for k in 0..f.tau.len() {
            let mut row = vec![*theta, f.tau[k]];
            row.extend(f.channels.iter().map(|c| c[k]));
            row.push(sf[k]);
            row.push(sb[k]);
            table.row(&row);
        }
        let mut row = vec![Some(*theta)];
        let combined = [pulse_stats(&f.tau, &sf), pulse_stats(&f.tau, &sb)];
        for st in f.stats.iter().chain(&combined) {
            row.push(st.map(|p| p.delay));
            row.push(st.map(|p| p.fwhm));
        }
        stats.row_opt(&row);
    }
    sink.csv("flux.csv", &table)?;
    sink.csv("flux_stats.csv", &stats)
}

pub fn hom(run: &Run, sink: &mut Sink, window: f64) -> Result<(), CliError> {
    let delays = run.delays()?;
    let results: Vec<(f64, HomScan)> = sweep(run, |t| {
        Ok(match amplitude(run, t)? {
            Amplitude::Pulsed(j) => hom_scan(&j, &delays, window)?,
            Amplitude::Cw(c) => hom_scan_cw(&c, &delays, window)?,
        })
    })?;
    let r = columns("Rn");
    let mut table = Table::new(&header(&["theta_deg", "tau_fs"], &r, &[]));
    table.comment("#stats,channel,theta_deg,center_fs,fwhm_fs,visibility,minimum");
    for (theta, scan) in &results {
        for k in 0..scan.tau.len() {
            let mut row = vec![*theta, scan.tau[k]];
            row.extend(scan.channels.iter().map(|c| c[k]));
            table.row(&row);
        }
        for (label, st) in CHANNELS.iter().zip(&scan.stats) {
            table.footer(
                label,
                &[
                    Some(*theta),
                    st.map(|d| d.center),
                    st.map(|d| d.fwhm),
                    st.map(|d| d.visibility),
                    st.map(|d| d.minimum),
                ],
            );
        }
    }
    sink.csv("hom.csv", &table)
}

pub fn efficiency(run: &Run, sink: &mut Sink) -> Result<(), CliError> {
    let e = &run.config.efficiency;
    let ws = e.signal_rad_per_fs.unwrap_or(0.5 * run.pump.omega0);
    if !(ws > 0.0 && ws < run.pump.omega0) {
        return Err(CliError::Config(format!(
            "efficiency signal frequency {ws} rad/fs outside (0, omega_p)"
        )));
    }
    let results: Vec<(f64, EfficiencyReport)> = sweep(run, |t| {
        let geometry = run.geometry(t);
        if run.is_cw() {
            return Ok(efficiency_cw_point(
                &run.stack,
                &run.pump,
                &geometry,
                ws,
                e.reference_factor,
            )?);
        }
        // Two-node signal grid starting at ws; the idler grid spans the pump band around its complement.
        let idler = run.signal_grid()?;
        let gs = FrequencyGrid::new(ws, ws + idler.step, 2)?;
        let gi = FrequencyGrid::centered(
            run.pump.omega0 - ws,
            run.config.grid.relative_half_span,
            idler.len,
        )?;
        let amp = jsa(&run.stack, &run.pump, &geometry, gs, gi)?;
        let reference = reference_jsa(&run.stack, &run.pump, gs, gi, e.reference_factor)?;
        Ok(relative_efficiency(&amp, &reference, ws)?)
    })?;
    let eta = columns("eta");
    let mut table = Table::new(&header(&["theta_deg"], &eta, &["eta_total"]));
    for (theta, r) in &results {
        let mut row = vec![*theta];
        row.extend(r.channels);
        row.push(r.total);
        table.row(&row);
    }
    sink.csv("efficiency.csv", &table)
}
