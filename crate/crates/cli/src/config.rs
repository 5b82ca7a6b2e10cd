//! Run configuration: one JSON file per run.
//!
//! Relative `stack`, `materials` and `output_dir` paths are resolved against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use pbg_spdc::em::band_edge_resonance;
use pbg_spdc::materials::load_materials;
use pbg_spdc::observables::{RefFrequencyFactor, DIP_WINDOW};
use pbg_spdc::pump::{PumpKind, PumpSpec};
use pbg_spdc::spdc::{EmissionGeometry, FrequencyGrid};
use pbg_spdc::structure::{load_stack, Stack};
use pbg_spdc::units::{omega_from_wavelength, wavelength_from_omega};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub stack: PathBuf,
    pub materials: PathBuf,
    pub pump: PumpBlock,
    #[serde(default)]
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub transmission: TransmissionBlock,
    #[serde(default)]
    pub hom: HomBlock,
    #[serde(default)]
    pub efficiency: EfficiencyBlock,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum WavelengthSetting {
    Nm(f64),
    Keyword(Keyword),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Resonance,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpBlock {
    pub kind: PumpKind,
    /// Carrier wavelength in nm, or `"resonance"` for the band-edge resonance of the stack.
    pub wavelength_nm: WavelengthSetting,
    #[serde(default)]
    pub tau_fs: Option<f64>,
    #[serde(default)]
    pub chirp: f64,
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default)]
    pub phi_deg: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub resonance_scan: ResonanceScan,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceScan {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub steps: usize,
}

impl Default for ResonanceScan {
    fn default() -> Self {
        ResonanceScan {
            lo_nm: 600.0,
            hi_nm: 760.0,
            steps: 801,
        }
    }
}

/// A single value, an explicit list, or an inclusive evenly spaced range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Single(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            Sweep::Single(v) => Ok(vec![v]),
            Sweep::List(ref v) => Ok(v.clone()),
            Sweep::Range { start, stop, steps } => match steps {
                0 => Err(CliError::Config("sweep range needs steps >= 1".into())),
                1 => Ok(vec![start]),
                n => Ok((0..n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect()),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub theta_s_deg: Sweep,
    #[serde(default)]
    pub phi_s_deg: f64,
    #[serde(default)]
    pub phi_i_deg: f64,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock {
            theta_s_deg: Sweep::Single(0.0),
            phi_s_deg: 0.0,
            phi_i_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    /// Center of the signal (and idler) grid, rad/fs; half the pump carrier when unset.
    pub center_rad_per_fs: Option<f64>,
    /// Grid covers `center * (1 -+ relative_half_span)`.
    pub relative_half_span: f64,
    pub points: usize,
    pub tau_half_span_fs: f64,
    pub tau_points: usize,
    pub pad: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            center_rad_per_fs: None,
            relative_half_span: 0.1,
            points: 201,
            tau_half_span_fs: 1000.0,
            tau_points: 501,
            pad: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmissionBlock {
    pub lambda_start_nm: f64,
    pub lambda_stop_nm: f64,
    pub points: usize,
    pub omega_norm: OmegaNorm,
}

/// Reference of the `omega_norm` column: `omega / omega_p` or `2 omega / omega_p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaNorm {
    #[default]
    Pump,
    HalfPump,
}

impl Default for TransmissionBlock {
    fn default() -> Self {
        TransmissionBlock {
            lambda_start_nm: 500.0,
            lambda_stop_nm: 1600.0,
            points: 1101,
            omega_norm: OmegaNorm::Pump,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomBlock {
    /// Central fraction of the delay grid searched for the dip.
    pub window: f64,
}

impl Default for HomBlock {
    fn default() -> Self {
        HomBlock { window: DIP_WINDOW }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfficiencyBlock {
    pub reference_factor: RefFrequencyFactor,
    /// Signal frequency, rad/fs; half the pump carrier when unset.
    pub signal_rad_per_fs: Option<f64>,
}

/// Fully resolved inputs of a run.
pub struct Run {
    pub config: RunConfig,
    pub stack: Stack,
    pub pump: PumpSpec,
    pub thetas_deg: Vec<f64>,
    pub output_dir: PathBuf,
    pub stack_digest: String,
    pub config_digest: String,
    pub resonance_nm: Option<f64>,
}

impl Run {
    pub fn load(path: &Path, out_override: Option<&Path>) -> Result<Run, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Config(format!("{}: {}: {}", path.display(), e.path(), e.inner()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let registry = load_materials(resolve(&config.materials))?;
        let stack = load_stack(resolve(&config.stack), &registry)?;
        let (pump, resonance_nm) = build_pump(&config.pump, &stack)?;
        pump.validate()?;
        let thetas_deg = config.geometry.theta_s_deg.values()?;
        if let Some(t) = thetas_deg.iter().find(|t| !(t.abs() < 90.0)) {
            return Err(CliError::Config(format!(
                "signal angle {t} deg outside (-90, 90)"
            )));
        }
        let output_dir = match (out_override, &config.output_dir) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => resolve(o),
            (None, None) => PathBuf::from("out"),
        };
        let stack_digest = stack.digest();
        Ok(Run {
            config,
            stack,
            pump,
            thetas_deg,
            output_dir,
            stack_digest,
            config_digest: hex::encode(Sha256::digest(&bytes)),
            resonance_nm,
        })
    }

    pub fn geometry(&self, theta_deg: f64) -> EmissionGeometry {
        EmissionGeometry {
            theta_s: theta_deg.to_radians(),
            phi_s: self.config.geometry.phi_s_deg.to_radians(),
            phi_i: self.config.geometry.phi_i_deg.to_radians(),
        }
    }

    /// Signal grid; for cw pumping it is symmetric about half the pump frequency.
    pub fn signal_grid(&self) -> Result<FrequencyGrid, CliError> {
        let g = &self.config.grid;
        let center = g.center_rad_per_fs.unwrap_or(0.5 * self.pump.omega0);
        if g.points < 2 || !(g.relative_half_span > 0.0) {
            return Err(CliError::Config(
                "grid needs points >= 2 and a positive half span".into(),
            ));
        }
        Ok(FrequencyGrid::centered(
            center,
            g.relative_half_span,
            g.points,
        )?)
    }

    /// Idler grid of a pulsed run: the signal grid itself unless the signal
    /// center is moved, then centered on the complementary frequency.
    pub fn idler_grid(&self) -> Result<FrequencyGrid, CliError> {
        let s = self.signal_grid()?;
        match self.config.grid.center_rad_per_fs {
            None => Ok(s),
            Some(c) => Ok(FrequencyGrid::centered(
                self.pump.omega0 - c,
                self.config.grid.relative_half_span,
                s.len,
            )?),
        }
    }

    pub fn delays(&self) -> Result<Vec<f64>, CliError> {
        let g = &self.config.grid;
        if !(g.tau_half_span_fs > 0.0) || g.tau_points < 2 {
            return Err(CliError::Config(
                "delay grid needs tau_points >= 2 and a positive half span".into(),
            ));
        }
        Ok(pbg_spdc::observables::delay_grid(
            g.tau_half_span_fs,
            g.tau_points,
        ))
    }

    pub fn is_cw(&self) -> bool {
        self.pump.kind == PumpKind::Cw
    }

    pub fn require_pulsed(&self, command: &str) -> Result<(), CliError> {
        if self.is_cw() {
            return Err(CliError::Config(format!(
                "`{command}` needs a gaussian pump"
            )));
        }
        Ok(())
    }

    pub fn metadata(&self) -> String {
        format!(
            "# pbg-spdc {} stack_sha256={} config_sha256={}",
            env!("CARGO_PKG_VERSION"),
            self.stack_digest,
            self.config_digest
        )
    }

    pub fn pump_wavelength_nm(&self) -> f64 {
        wavelength_from_omega(self.pump.omega0)
    }
}

fn build_pump(block: &PumpBlock, stack: &Stack) -> Result<(PumpSpec, Option<f64>), CliError> {
    let (wavelength, resonance) = match block.wavelength_nm {
        WavelengthSetting::Nm(w) => (w, None),
        WavelengthSetting::Keyword(Keyword::Resonance) => {
            let s = block.resonance_scan;
            let r = band_edge_resonance(stack, s.lo_nm, s.hi_nm, s.steps)?;
            (r, Some(r))
        }
    };
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(CliError::Config(format!("pump wavelength {wavelength} nm")));
    }
    let tau_fs = match (block.kind, block.tau_fs) {
        (PumpKind::Gaussian, None) => {
            return Err(CliError::Config("gaussian pump needs tau_fs".into()))
        }
        (_, t) => t.unwrap_or(0.0),
    };
    Ok((
        PumpSpec {
            kind: block.kind,
            amplitude: block.amplitude,
            tau_fs,
            chirp: block.chirp,
            omega0: omega_from_wavelength(wavelength),
            theta: block.theta_deg.to_radians(),
            phi: block.phi_deg.to_radians(),
        },
        resonance,
    ))
}
