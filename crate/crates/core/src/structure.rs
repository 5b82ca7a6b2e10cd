//! Layered-stack geometry: ambient media, layers, nonlinear tensors.
//!
//! Regions are numbered `0..=N+1`: region 0 is the left ambient medium,
//! regions `1..=N` are the layers and region `N+1` the right ambient medium.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::materials::{Material, MaterialRegistry};

/// Second-order susceptibility tensor `d_{ijk}` in pm/V.
///
/// Index order is (pump, signal, idler) polarization components in the
/// laboratory frame `x, y, z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Chi2Tensor(pub [[[f64; 3]; 3]; 3]);

impl Chi2Tensor {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Tensor with the single `d_xxx` component that couples TE pump, signal and idler.
    pub fn te_scalar(d_eff: f64) -> Self {
        let mut t = Self::zero();
        t.0[0][0][0] = d_eff;
        t
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().flatten().all(|&v| v == 0.0)
    }

    /// Largest component modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `Some(d)` when the tensor is exactly [`Chi2Tensor::te_scalar`]`(d)`.
    pub fn as_te_scalar(&self) -> Option<f64> {
        let d = self.0[0][0][0];
        (Chi2Tensor::te_scalar(d) == *self).then_some(d)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = *self;
        t.0.iter_mut()
            .flatten()
            .flatten()
            .for_each(|v| *v *= factor);
        t
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub material: Arc<Material>,
    pub thickness_nm: f64,
    pub chi2: Chi2Tensor,
}

impl PartialEq for Layer {
    fn eq(&self, other: &Self) -> bool {
        *self.material == *other.material
            && self.thickness_nm == other.thickness_nm
            && self.chi2 == other.chi2
    }
}

impl Layer {
    pub fn new(material: Arc<Material>, thickness_nm: f64, chi2: Chi2Tensor) -> Self {
        Layer {
            material,
            thickness_nm,
            chi2,
        }
    }

    pub fn linear(material: Arc<Material>, thickness_nm: f64) -> Self {
        Layer::new(material, thickness_nm, Chi2Tensor::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    ambient_left: Arc<Material>,
    layers: Vec<Layer>,
    ambient_right: Arc<Material>,
    z0_nm: f64,
}

impl Stack {
    pub fn new(
        ambient_left: Arc<Material>,
        layers: Vec<Layer>,
        ambient_right: Arc<Material>,
        z0_nm: f64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidStack("empty layer list".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if !(layer.thickness_nm.is_finite() && layer.thickness_nm > 0.0) {
                return Err(Error::InvalidStack(format!(
                    "layer {} has nonpositive thickness {} nm",
                    i + 1,
                    layer.thickness_nm
                )));
            }
            if layer.chi2.0.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidStack(format!(
                    "layer {} has a non-finite nonlinear coefficient",
                    i + 1
                )));
            }
        }
        if !z0_nm.is_finite() {
            return Err(Error::InvalidStack("non-finite z0".into()));
        }
        Ok(Stack {
            ambient_left,
            layers,
            ambient_right,
            z0_nm,
        })
    }

    /// Stack between vacuum half-spaces starting at `z = 0`.
    pub fn in_vacuum(layers: Vec<Layer>) -> Result<Self> {
        let vacuum = Arc::new(Material::vacuum());
        Stack::new(vacuum.clone(), layers, vacuum, 0.0)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn ambient_left(&self) -> &Arc<Material> {
        &self.ambient_left
    }

    pub fn ambient_right(&self) -> &Arc<Material> {
        &self.ambient_right
    }

    pub fn z0_nm(&self) -> f64 {
        self.z0_nm
    }

    /// Material of region `r` in `0..=N+1`.
    pub fn region_material(&self, region: usize) -> &Arc<Material> {
        match region {
            0 => &self.ambient_left,
            r if r <= self.layers.len() => &self.layers[r - 1].material,
            _ => &self.ambient_right,
        }
    }

    /// Boundary positions `z_0 ..= z_N` with `z_l = z_{l-1} + L_l`.
    pub fn boundary_positions(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.layers.len() + 1);
        z.push(self.z0_nm);
        for layer in &self.layers {
            let last = *z.last().unwrap();
            z.push(last + layer.thickness_nm);
        }
        z
    }

    pub fn total_thickness_nm(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_nm).sum()
    }

    pub fn nonlinear_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| !l.chi2.is_zero()).count()
    }

    /// Refractive indices of all `N + 2` regions at angular frequency `omega`.
    pub fn indices(&self, omega: f64) -> Result<Vec<f64>> {
        // Few distinct materials, many layers: evaluate each material once.
        let mut seen: Vec<(*const Material, f64)> = Vec::with_capacity(4);
        (0..self.layers.len() + 2)
            .map(|r| {
                let m = self.region_material(r);
                let key = Arc::as_ptr(m);
                if let Some(&(_, n)) = seen.iter().find(|(p, _)| *p == key) {
                    return Ok(n);
                }
                let n = m.index_at(omega)?;
                seen.push((key, n));
                Ok(n)
            })
            .collect()
    }

    /// Returns a copy with every nonlinear tensor multiplied by `factor`.
    pub fn with_scaled_nonlinearity(&self, factor: f64) -> Stack {
        let mut s = self.clone();
        for l in &mut s.layers {
            l.chi2 = l.chi2.scaled(factor);
        }
        s
    }

    /// Serializable description with an explicit layer list.
    pub fn to_file(&self) -> StackFile {
        StackFile {
            ambient_left: Some(self.ambient_left.name.clone()),
            ambient_right: Some(self.ambient_right.name.clone()),
            z0_nm: self.z0_nm,
            layers: self.layers.iter().map(LayerSpec::from_layer).collect(),
            periodic: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("stack serialization is infallible")
    }

    /// SHA-256 over the explicit layer list and every referenced material definition.
    pub fn digest(&self) -> String {
        let mut materials: Vec<&Material> = Vec::new();
        for r in 0..self.layers.len() + 2 {
            let m = self.region_material(r).as_ref();
            if !materials.iter().any(|x| x.name == m.name) {
                materials.push(m);
            }
        }
        let doc = serde_json::json!({ "stack": self.to_file(), "materials": materials });
        let mut hasher = Sha256::new();
        hasher.update(doc.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Repeats `cell` `repetitions` times; with `terminate_with_first` one extra
/// copy of the first cell layer is appended.
pub fn build_periodic(
    cell: &[Layer],
    repetitions: usize,
    terminate_with_first: bool,
) -> Result<Vec<Layer>> {
    if cell.is_empty() {
        return Err(Error::InvalidStack("empty periodic cell".into()));
    }
    if repetitions == 0 {
        return Err(Error::InvalidStack("periodic repetitions must be >= 1".into()));
    }
    let mut layers = Vec::with_capacity(cell.len() * repetitions + 1);
    for _ in 0..repetitions {
        layers.extend(cell.iter().cloned());
    }
    if terminate_with_first {
        layers.push(cell[0].clone());
    }
    Ok(layers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub material: String,
    pub thickness_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_tensor_pm_per_v: Option<Chi2Tensor>,
    #[serde(
        default,
        rename = "d_eff_TE_pm_per_V",
        skip_serializing_if = "Option::is_none"
    )]
    pub d_eff_te_pm_per_v: Option<f64>,
}

impl LayerSpec {
    fn from_layer(layer: &Layer) -> Self {
        let (tensor, scalar) = match layer.chi2.as_te_scalar() {
            Some(0.0) => (None, None),
            Some(d) => (None, Some(d)),
            None => (Some(layer.chi2), None),
        };
        LayerSpec {
            material: layer.material.name.clone(),
            thickness_nm: layer.thickness_nm,
            d_tensor_pm_per_v: tensor,
            d_eff_te_pm_per_v: scalar,
        }
    }

    fn resolve(&self, registry: &MaterialRegistry) -> Result<Layer> {
        let chi2 = match (self.d_tensor_pm_per_v, self.d_eff_te_pm_per_v) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidStack(format!(
                    "layer of `{}` sets both d_tensor_pm_per_V and d_eff_TE_pm_per_V",
                    self.material
                )))
            }
            (Some(t), None) => t,
            (None, Some(d)) => Chi2Tensor::te_scalar(d),
            (None, None) => Chi2Tensor::zero(),
        };
        Ok(Layer::new(
            resolve_material(registry, &self.material)?,
            self.thickness_nm,
            chi2,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicSpec {
    pub cell: Vec<LayerSpec>,
    pub repetitions: usize,
    #[serde(default)]
    pub terminate_with_first: bool,
}

/// On-disk stack description.
///
/// ```json
/// {"ambient_left": "vacuum", "ambient_right": "vacuum",
///  "layers": [{"material": "GaN", "thickness_nm": 117, "d_eff_TE_pm_per_V": 10}],
///  "periodic": {"cell": [...], "repetitions": 24, "terminate_with_first": true}}
/// ```
///
/// Explicit `layers` come first, followed by the expanded `periodic` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_right: Option<String>,
    #[serde(default)]
    pub z0_nm: f64,
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicSpec>,
}

impl StackFile {
    pub fn resolve(&self, registry: &MaterialRegistry) -> Result<Stack> {
        let ambient = |name: &Option<String>| match name {
            Some(n) => resolve_material(registry, n),
            None => Ok(Arc::new(Material::vacuum())),
        };
        let mut layers = self
            .layers
            .iter()
            .map(|l| l.resolve(registry))
            .collect::<Result<Vec<_>>>()?;
        if let Some(p) = &self.periodic {
            let cell = p
                .cell
                .iter()
                .map(|l| l.resolve(registry))
                .collect::<Result<Vec<_>>>()?;
            layers.extend(build_periodic(&cell, p.repetitions, p.terminate_with_first)?);
        }
        Stack::new(
            ambient(&self.ambient_left)?,
            layers,
            ambient(&self.ambient_right)?,
            self.z0_nm,
        )
    }
}

/// `vacuum` is always resolvable, even when absent from the registry.
fn resolve_material(registry: &MaterialRegistry, name: &str) -> Result<Arc<Material>> {
    match registry.get(name) {
        Ok(m) => Ok(m),
        Err(_) if name == "vacuum" => Ok(Arc::new(Material::vacuum())),
        Err(e) => Err(e),
    }
}

pub fn parse_stack(text: &str, source_name: &str, registry: &MaterialRegistry) -> Result<Stack> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: StackFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    file.resolve(registry)
}

pub fn load_stack(path: impl AsRef<Path>, registry: &MaterialRegistry) -> Result<Stack> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stack(&text, &path.display().to_string(), registry)
}
