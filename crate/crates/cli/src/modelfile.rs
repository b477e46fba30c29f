//! Model files: the built-in benchmark or explicit parameterized patches.

use std::path::Path;

use serde::Deserialize;

use igarom::fom::Source;
use igarom::geometry::benchmark::uniform_knots;
use igarom::geometry::{benchmark_model, BenchmarkConfig, Face, MultipatchModel, ParameterSpace, ParameterizedPatch};
use igarom::splines::io::parse_patch;
use igarom::splines::{ControlNet, GeometricMap, KnotVector, Point, TensorBasis, MAX_DIM};

use crate::archive::sha256_hex;
use crate::codec::{put_params, put_source, Encoder};
use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    Constant { value: f64 },
    /// `scale · x y z` (product of the physical coordinates).
    Monomial { scale: f64 },
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::Monomial { scale: 2.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_patches")]
    pub patches: usize,
    #[serde(default = "default_elements")]
    pub elements: Vec<usize>,
    #[serde(default = "default_bound")]
    pub bound: f64,
}

fn default_dim() -> usize {
    3
}
fn default_patches() -> usize {
    4
}
fn default_elements() -> Vec<usize> {
    vec![4, 4, 4]
}
fn default_bound() -> f64 {
    0.2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    /// Plain-text patch file (alternative to the inline fields).
    pub file: Option<String>,
    pub degree: Option<usize>,
    pub knots: Option<Vec<Vec<f64>>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub dirichlet: Vec<String>,
    /// Global parameter index of each displacement table.
    #[serde(default)]
    pub params: Vec<usize>,
    #[serde(default)]
    pub displacements: Vec<Vec<Vec<f64>>>,
    /// Uniform refinement (elements per direction) applied after loading.
    pub refine: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub source: SourceSpec,
    pub benchmark: Option<BenchmarkSpec>,
    pub parameters: Option<ParameterSpec>,
    #[serde(default)]
    pub patch: Vec<PatchSpec>,
}

/// A loaded model with its right-hand side.
pub struct LoadedModel {
    pub model: MultipatchModel<f64>,
    pub source: Source<f64>,
    pub hash: String,
}

fn parse_face(s: &str) -> Result<Face, CliError> {
    let bad = || CliError::Parse(format!("face `{s}` is not of the form xi<d>=<0|1>"));
    let (d, side) = s.trim().strip_prefix("xi").and_then(|r| r.split_once('=')).ok_or_else(bad)?;
    let d: usize = d.parse().map_err(|_| bad())?;
    let side: usize = side.parse().map_err(|_| bad())?;
    if d == 0 || d > MAX_DIM || side > 1 {
        return Err(bad());
    }
    Ok(Face::new(d - 1, side))
}

fn to_point(v: &[f64], what: &str) -> Result<Point<f64>, CliError> {
    if v.is_empty() || v.len() > MAX_DIM {
        return Err(CliError::Parse(format!("{what}: expected 1 to {MAX_DIM} coordinates, got {}", v.len())));
    }
    let mut p = [0.0; MAX_DIM];
    p[..v.len()].copy_from_slice(v);
    Ok(p)
}

fn inline_map(p: &PatchSpec, k: usize) -> Result<GeometricMap<f64>, CliError> {
    let missing = |f: &str| CliError::Parse(format!("patch {k}: missing `{f}` (or give `file`)"));
    let degree = p.degree.ok_or_else(|| missing("degree"))?;
    let knots = p.knots.as_ref().ok_or_else(|| missing("knots"))?;
    let points = p.points.as_ref().ok_or_else(|| missing("points"))?;
    let dirs = knots
        .iter()
        .map(|kv| KnotVector::new(kv.clone(), degree))
        .collect::<igarom::Result<Vec<_>>>()?;
    let basis = TensorBasis::new(dirs)?;
    let pts = points
        .iter()
        .enumerate()
        .map(|(i, v)| to_point(v, &format!("patch {k} point {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = p.weights.clone().unwrap_or_else(|| vec![1.0; pts.len()]);
    Ok(GeometricMap::new(basis, ControlNet::new(pts, weights)?)?)
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn build(&self, base: &Path) -> Result<LoadedModel, CliError> {
        let source = match self.source {
            SourceSpec::Constant { value } => Source::Constant(value),
            SourceSpec::Monomial { scale } => Source::Monomial { scale },
        };
        let model = match (&self.benchmark, self.patch.is_empty()) {
            (Some(b), true) => {
                if b.elements.len() < b.dim {
                    return Err(CliError::Parse(format!("benchmark.elements needs {} entries", b.dim)));
                }
                let mut elements = [1; MAX_DIM];
                elements[..b.dim].copy_from_slice(&b.elements[..b.dim]);
                benchmark_model(&BenchmarkConfig {
                    dim: b.dim,
                    patches: b.patches,
                    elements,
                    bound: b.bound,
                })?
            }
            (None, false) => self.build_patches(base)?,
            (Some(_), false) => return Err(CliError::Parse("give either [benchmark] or [[patch]], not both".into())),
            (None, true) => return Err(CliError::Parse("model defines no patches".into())),
        };
        let hash = model_hash(&model, &source)?;
        Ok(LoadedModel { model, source, hash })
    }

    fn build_patches(&self, base: &Path) -> Result<MultipatchModel<f64>, CliError> {
        let ps = self
            .parameters
            .as_ref()
            .ok_or_else(|| CliError::Parse("explicit patches need a [parameters] table".into()))?;
        let mut patches = Vec::new();
        let mut patch_params = Vec::new();
        for (k, p) in self.patch.iter().enumerate() {
            let map = match &p.file {
                Some(f) => {
                    let path = base.join(f);
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                    parse_patch::<f64>(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
                }
                None => inline_map(p, k)?,
            };
            if p.displacements.len() != p.params.len() {
                return Err(CliError::Parse(format!(
                    "patch {k}: {} displacement tables for {} parameters",
                    p.displacements.len(),
                    p.params.len()
                )));
            }
            let disp = p
                .displacements
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    t.iter()
                        .enumerate()
                        .map(|(i, v)| to_point(v, &format!("patch {k} displacement {j} point {i}")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let faces = p.dirichlet.iter().map(|s| parse_face(s)).collect::<Result<Vec<_>, _>>()?;
            let mut patch = ParameterizedPatch::new(map, disp, faces)?;
            if let Some(r) = &p.refine {
                for (d, &n) in r.iter().enumerate().take(patch.dim()) {
                    patch = patch.insert_knots(d, &uniform_knots::<f64>(n))?;
                }
            }
            patches.push(patch);
            patch_params.push(p.params.clone());
        }
        let params = ParameterSpace::new(ps.lower.clone(), ps.upper.clone(), patch_params)?;
        Ok(MultipatchModel::new(patches, params)?)
    }
}

/// Loads and builds a model file.
pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec = ModelSpec::parse(&text).map_err(|e| e.in_file(path))?;
    spec.build(path.parent().unwrap_or(Path::new(".")))
}

/// SHA-256 of the model data (knots, nets, displacements, boundary tags,
/// parameter box and source), independent of the file layout.
pub fn model_hash(model: &MultipatchModel<f64>, source: &Source<f64>) -> Result<String, CliError> {
    let mut e = Encoder::new();
    e.usize(model.dim());
    for p in model.patches() {
        let basis = p.map().basis();
        e.usize(basis.dim());
        for d in 0..basis.dim() {
            let kv = basis.direction(d);
            e.usize(kv.degree());
            e.f64s(kv.knots());
        }
        e.points(p.base_points());
        e.f64s(p.map().weights());
        e.usize(p.displacements().len());
        p.displacements().iter().for_each(|d| e.points(d));
        let faces: Vec<usize> = p.dirichlet_faces().iter().map(|f| f.id()).collect();
        e.usizes(&faces);
    }
    put_params(&mut e, model.params());
    put_source(&mut e, source)?;
    Ok(sha256_hex(&e.finish()))
}
