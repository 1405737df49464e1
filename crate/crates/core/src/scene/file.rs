//! TOML scene description.
//!
//! ```toml
//! [[meshes]]
//! obj = "floor.obj"      # relative to the scene file
//! material = 0
//!
//! [[materials]]
//! kind = "lambertian"    # or "ggx" (roughness, eta) or "phong" (specular, exponent)
//! albedo = [0.75, 0.75, 0.75]
//!
//! [[lights]]
//! position = [0.0, 1.9, 0.0]
//! direction = [0.0, -1.0, 0.0]
//! half_angle_deg = 35.0
//! power = [20.0, 20.0, 20.0]
//! rsm_resolution = 280
//!
//! [camera]
//! position = [0.0, 1.0, 3.9]
//! look_at = [0.0, 1.0, 0.0]
//! up = [0.0, 1.0, 0.0]
//! vfov_deg = 40.0
//! width = 64
//! height = 64
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{parse_obj, Camera, Scene, SceneError, SpotLight};
use crate::brdf::{BrdfModel, DEFAULT_ETA};
use crate::math::{Direction, Rgb, Vec3};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub meshes: Vec<MeshEntry>,
    pub materials: Vec<MaterialEntry>,
    pub lights: Vec<LightEntry>,
    pub camera: CameraEntry,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshEntry {
    pub obj: String,
    pub material: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub kind: String,
    pub albedo: [f64; 3],
    pub roughness: Option<f64>,
    pub eta: Option<f64>,
    pub specular: Option<[f64; 3]>,
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightEntry {
    pub position: [f64; 3],
    pub direction: [f64; 3],
    pub half_angle_deg: f64,
    pub power: [f64; 3],
    pub rsm_resolution: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub vfov_deg: f64,
    pub width: usize,
    pub height: usize,
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl MaterialEntry {
    fn to_model(&self, index: usize) -> Result<BrdfModel, SceneError> {
        let invalid = |m: String| SceneError::Invalid(format!("material {index}: {m}"));
        let albedo = v3(self.albedo);
        let model = match self.kind.as_str() {
            "lambertian" => BrdfModel::Lambertian { albedo },
            "ggx" => BrdfModel::Ggx {
                albedo,
                roughness: self.roughness.ok_or_else(|| invalid("ggx needs roughness".into()))?,
                eta: self.eta.unwrap_or(DEFAULT_ETA),
            },
            "phong" => BrdfModel::Phong {
                diffuse: albedo,
                specular: v3(self.specular.ok_or_else(|| invalid("phong needs specular".into()))?),
                exponent: self.exponent.ok_or_else(|| invalid("phong needs exponent".into()))?,
            },
            other => return Err(invalid(format!("unknown kind {other:?}"))),
        };
        Ok(model)
    }
}

/// Parses scene text; `resolve` maps each `obj` entry to the OBJ source.
pub fn parse_scene(
    text: &str,
    name: &str,
    resolve: &dyn Fn(&str) -> Result<String, SceneError>,
) -> Result<Scene, SceneError> {
    let file: SceneFile =
        toml::from_str(text).map_err(|e| SceneError::Parse { path: name.to_string(), message: e.to_string() })?;
    let materials = file.materials.iter().enumerate().map(|(i, m)| m.to_model(i)).collect::<Result<Vec<_>, _>>()?;
    let mut meshes = Vec::with_capacity(file.meshes.len());
    for entry in &file.meshes {
        let src = resolve(&entry.obj)?;
        meshes.push(parse_obj(&src, &entry.obj)?.into_mesh(&entry.obj, entry.material)?);
    }
    let mut lights = Vec::with_capacity(file.lights.len());
    for (i, l) in file.lights.iter().enumerate() {
        let dir = Direction::new(v3(l.direction))
            .ok_or_else(|| SceneError::Invalid(format!("light {i}: direction must be non-zero")))?;
        lights.push(SpotLight::new(v3(l.position), dir, l.half_angle_deg.to_radians(), v3(l.power).max(Rgb::ZERO), l.rsm_resolution));
        if l.power.iter().any(|p| *p < 0.0) {
            return Err(SceneError::Invalid(format!("light {i}: power must be non-negative")));
        }
    }
    let c = &file.camera;
    let camera = Camera::look_at(v3(c.position), v3(c.look_at), v3(c.up), c.vfov_deg.to_radians(), c.width, c.height)?;
    Scene::new(meshes, materials, lights, camera)
}

/// Loads a scene file; OBJ paths are relative to its directory.
pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| SceneError::Io { path: p.display().to_string(), source })
    };
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    parse_scene(&text, &path.display().to_string(), &|obj| read(&base.join(obj)))
}
