//! Refractive-index models for layer and ambient media.
//!
//! Every medium is lossless and isotropic: a single real index per vacuum
//! wavelength. Three dispersion models are supported:
//!
//! * `constant`: a fixed index,
//! * `sellmeier`: `n^2 = offset + sum_k B_k l^2 / (l^2 - C_k)`, `l` in µm and `C_k` in µm^2,
//! * `tabulated`: linear interpolation between `(wavelength_nm, index)` samples.
//!
//! Materials files are JSON arrays, see [`MaterialRegistry::from_json_str`].

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::wavelength_from_omega;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerm {
    pub b: f64,
    /// Resonance term, µm^2.
    pub c_um2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DispersionModel {
    Constant {
        index: f64,
    },
    Sellmeier {
        offset: f64,
        terms: Vec<SellmeierTerm>,
    },
    Tabulated {
        /// `[wavelength_nm, index]` pairs, strictly increasing in wavelength.
        table: Vec<[f64; 2]>,
    },
}

impl DispersionModel {
    fn evaluate(&self, wavelength_nm: f64) -> f64 {
        match self {
            DispersionModel::Constant { index } => *index,
            DispersionModel::Sellmeier { offset, terms } => {
                let l2 = (wavelength_nm * 1e-3).powi(2);
                let n2 = terms
                    .iter()
                    .fold(*offset, |acc, t| acc + t.b * l2 / (l2 - t.c_um2));
                n2.sqrt()
            }
            DispersionModel::Tabulated { table } => interpolate(table, wavelength_nm),
        }
    }
}

fn interpolate(table: &[[f64; 2]], x: f64) -> f64 {
    let hi = table.partition_point(|p| p[0] < x);
    if hi == 0 {
        return table[0][1];
    }
    if hi == table.len() {
        return table[hi - 1][1];
    }
    let [x0, y0] = table[hi - 1];
    let [x1, y1] = table[hi];
    if x == x1 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaterial")]
pub struct Material {
    pub name: String,
    #[serde(flatten)]
    pub dispersion: DispersionModel,
    /// Valid vacuum-wavelength interval, nm. Defaults to the table span for
    /// tabulated models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_range_nm: Option<[f64; 2]>,
    /// Free-form provenance of the dispersion data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Constant,
    Sellmeier,
    Tabulated,
}

/// Flat on-disk record. Kept free of `flatten` so parse errors keep their full JSON path.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    name: String,
    model: ModelKind,
    index: Option<f64>,
    offset: Option<f64>,
    terms: Option<Vec<SellmeierTerm>>,
    table: Option<Vec<[f64; 2]>>,
    valid_range_nm: Option<[f64; 2]>,
    source: Option<String>,
}

impl TryFrom<RawMaterial> for Material {
    type Error = String;

    fn try_from(raw: RawMaterial) -> std::result::Result<Self, String> {
        let stray = |field: &str, present: bool| {
            if present {
                Err(format!("field `{field}` does not belong to this model"))
            } else {
                Ok(())
            }
        };
        let dispersion = match raw.model {
            ModelKind::Constant => {
                stray("terms", raw.terms.is_some())?;
                stray("offset", raw.offset.is_some())?;
                stray("table", raw.table.is_some())?;
                DispersionModel::Constant {
                    index: raw.index.ok_or("constant model requires `index`")?,
                }
            }
            ModelKind::Sellmeier => {
                stray("index", raw.index.is_some())?;
                stray("table", raw.table.is_some())?;
                DispersionModel::Sellmeier {
                    offset: raw.offset.ok_or("sellmeier model requires `offset`")?,
                    terms: raw.terms.ok_or("sellmeier model requires `terms`")?,
                }
            }
            ModelKind::Tabulated => {
                stray("index", raw.index.is_some())?;
                stray("terms", raw.terms.is_some())?;
                stray("offset", raw.offset.is_some())?;
                DispersionModel::Tabulated {
                    table: raw.table.ok_or("tabulated model requires `table`")?,
                }
            }
        };
        Ok(Material {
            name: raw.name,
            dispersion,
            valid_range_nm: raw.valid_range_nm,
            source: raw.source,
        })
    }
}

impl Material {
    pub fn constant(name: impl Into<String>, index: f64) -> Self {
        Material {
            name: name.into(),
            dispersion: DispersionModel::Constant { index },
            valid_range_nm: Some([0.0, f64::INFINITY]),
            source: None,
        }
    }

    pub fn vacuum() -> Self {
        Material::constant("vacuum", 1.0)
    }

    pub fn valid_range(&self) -> (f64, f64) {
        match (self.valid_range_nm, &self.dispersion) {
            (Some([lo, hi]), _) => (lo, hi),
            (None, DispersionModel::Tabulated { table }) if !table.is_empty() => {
                (table[0][0], table[table.len() - 1][0])
            }
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn refractive_index(&self, wavelength_nm: f64) -> Result<f64> {
        let (lo, hi) = self.valid_range();
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(Error::OutOfRange {
                material: self.name.clone(),
                wavelength_nm,
                lo,
                hi,
            });
        }
        let n = self.dispersion.evaluate(wavelength_nm);
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::NonPhysicalIndex {
                material: self.name.clone(),
                wavelength_nm,
                index: n,
            });
        }
        Ok(n)
    }

    /// Index at angular frequency `omega` (rad/fs).
    pub fn index_at(&self, omega: f64) -> Result<f64> {
        self.refractive_index(wavelength_from_omega(omega))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("empty name".into());
        }
        if let Some([lo, hi]) = self.valid_range_nm {
            if !(lo >= 0.0 && hi > lo) {
                return Err(format!("valid_range_nm [{lo}, {hi}] is not an interval"));
            }
        }
        match &self.dispersion {
            DispersionModel::Constant { index } => {
                if !(index.is_finite() && *index >= 1.0) {
                    return Err(format!("constant index {index} must be finite and >= 1"));
                }
            }
            DispersionModel::Sellmeier { offset, terms } => {
                if !offset.is_finite() || terms.iter().any(|t| !t.b.is_finite() || !t.c_um2.is_finite()) {
                    return Err("non-finite Sellmeier coefficient".into());
                }
                if self.valid_range_nm.is_none() {
                    return Err("Sellmeier models require valid_range_nm".into());
                }
            }
            DispersionModel::Tabulated { table } => {
                if table.len() < 2 {
                    return Err("tabulated models need at least two samples".into());
                }
                if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err("table wavelengths must be strictly increasing".into());
                }
                if let Some(p) = table.iter().find(|p| !(p[1].is_finite() && p[1] >= 1.0)) {
                    return Err(format!("table index {} at {} nm must be >= 1", p[1], p[0]));
                }
                if let Some([lo, hi]) = self.valid_range_nm {
                    if lo < table[0][0] || hi > table[table.len() - 1][0] {
                        return Err("valid_range_nm extends beyond the table".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Named materials, immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct MaterialRegistry {
    materials: BTreeMap<String, Arc<Material>>,
}

impl MaterialRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, material: Material) -> Result<()> {
        material.validate().map_err(|reason| Error::InvalidDispersion {
            material: material.name.clone(),
            reason,
        })?;
        if self.materials.contains_key(&material.name) {
            return Err(Error::DuplicateMaterial(material.name));
        }
        self.materials
            .insert(material.name.clone(), Arc::new(material));
        Ok(())
    }

    /// Parses a materials document: a JSON array of objects
    /// `{name, model: "constant"|"sellmeier"|"tabulated", ..., valid_range_nm: [lo, hi]}`.
    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let entries: Vec<Material> =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        let mut registry = MaterialRegistry::new();
        for (i, material) in entries.into_iter().enumerate() {
            registry.insert(material).map_err(|e| match e {
                Error::InvalidDispersion { reason, .. } => Error::Parse {
                    source_name: source_name.to_string(),
                    path: format!("[{i}]"),
                    message: reason,
                },
                other => other,
            })?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Result<Arc<Material>> {
        self.materials
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }
}

pub fn load_materials(path: impl AsRef<Path>) -> Result<MaterialRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MaterialRegistry::from_json_str(&text, &path.display().to_string())
}
