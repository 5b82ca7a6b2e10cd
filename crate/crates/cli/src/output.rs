//! CSV and binary writers. Every file is written to a temporary sibling and
//! renamed into place.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use pbg_spdc::em::C64;
use pbg_spdc::spdc::{CwJsa, JsaGrid};

use crate::error::CliError;

pub const JSA_MAGIC: &[u8; 8] = b"PBGJSA01";
pub const JSA_VERSION: u32 = 1;

pub struct Sink {
    dir: PathBuf,
    metadata: Option<String>,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf, metadata: Option<String>) -> Result<Sink, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Sink {
            dir,
            metadata,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let mut text = String::new();
        if let Some(m) = &self.metadata {
            text.push_str(m);
            text.push('\n');
        }
        text.push_str(&table.render());
        self.bytes(name, text.as_bytes())
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let target = self.dir.join(name);
        atomic_write(&target, data)?;
        self.written.push(target);
        Ok(())
    }
}

fn atomic_write(target: &Path, data: &[u8]) -> Result<(), CliError> {
    let dir = target.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new()
        .prefix(".pbg-spdc-")
        .tempfile_in(dir)
        .map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(data)
        .map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(target)
        .map_err(|e| CliError::io(target, e.error))?;
    Ok(())
}

/// CSV body: header, data rows, then optional `#stats` footer lines.
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
    footer: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.rows.push(join(values));
    }

    pub fn extend(&mut self, rows: Vec<Vec<f64>>) {
        self.rows.extend(rows.iter().map(|r| join(r)));
    }

    pub fn row_opt(&mut self, values: &[Option<f64>]) {
        self.rows.push(
            values
                .iter()
                .map(|v| v.map(fmt).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(","),
        );
    }

    /// Raw line placed after the data rows, ahead of later footers.
    pub fn comment(&mut self, line: &str) {
        self.footer.push(line.to_string());
    }

    pub fn footer(&mut self, label: &str, values: &[Option<f64>]) {
        let mut line = format!("#stats,{label}");
        for v in values {
            line.push(',');
            if let Some(v) = v {
                let _ = write!(line, "{}", fmt(*v));
            }
        }
        self.footer.push(line);
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for line in self.rows.iter().chain(&self.footer) {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Shortest decimal that round-trips to the same f64.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

/// Angle rendered for file names, e.g. `13.8` or `-5`.
pub fn angle_tag(theta_deg: f64) -> String {
    fmt(theta_deg)
}

/// Binary amplitude file.
///
/// Little-endian layout:
///
/// | bytes | field |
/// |---|---|
/// | 8 | magic `PBGJSA01` |
/// | 4 | u32 format version (1) |
/// | 4 | u32 kind: 0 pulsed, 1 cw |
/// | 4 | u32 channel count (4) |
/// | 8 | u64 `n_s` |
/// | 8 | u64 `n_i` (1 for cw) |
/// | 8 | f64 signal grid start, rad/fs |
/// | 8 | f64 signal grid step, rad/fs |
/// | 8 | f64 idler grid start, rad/fs (cw: pump frequency) |
/// | 8 | f64 idler grid step, rad/fs (cw: 0) |
///
/// followed by the FF, FB, BF, BB sheets, each `n_s * n_i` complex64 values
/// (f32 real, f32 imaginary), row-major with rows indexed by the signal frequency.
/// For cw the idler frequency of row `k` is `omega_p - omega_s[k]`.
pub fn encode_jsa(jsa: &JsaGrid) -> Vec<u8> {
    let mut out = header(
        0,
        jsa.omega_s.len,
        jsa.omega_i.len,
        [
            jsa.omega_s.start,
            jsa.omega_s.step,
            jsa.omega_i.start,
            jsa.omega_i.step,
        ],
    );
    for sheet in &jsa.sheets {
        push_sheet(&mut out, sheet);
    }
    out
}

pub fn encode_cw(cw: &CwJsa) -> Vec<u8> {
    let mut out = header(
        1,
        cw.omega_s.len,
        1,
        [cw.omega_s.start, cw.omega_s.step, cw.omega_p, 0.0],
    );
    for sheet in &cw.amplitudes {
        push_sheet(&mut out, sheet);
    }
    out
}

fn header(kind: u32, n_s: usize, n_i: usize, grid: [f64; 4]) -> Vec<u8> {
    let mut out = Vec::with_capacity(68 + n_s * n_i * 32);
    out.extend_from_slice(JSA_MAGIC);
    for v in [JSA_VERSION, kind, 4] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(n_s as u64).to_le_bytes());
    out.extend_from_slice(&(n_i as u64).to_le_bytes());
    for v in grid {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn push_sheet(out: &mut Vec<u8>, sheet: &[C64]) {
    for z in sheet {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
}
