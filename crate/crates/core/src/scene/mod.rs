//! Triangle scenes, lights, camera and ray queries.

mod bvh;
mod file;
pub mod fixtures;
mod obj;

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::brdf::{BrdfError, BrdfModel};
use crate::math::{Direction, Frame, Rgb, Rigid, Vec3};

pub use bvh::Bvh;
pub use file::{load_scene, parse_scene, SceneFile};
pub use obj::{parse_obj, ObjMesh};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Obj { path: String, line: usize, message: String },
    #[error("scene file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("material {index}: {source}")]
    Material { index: usize, source: BrdfError },
}

/// One triangle with per-vertex shading normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub p: [Vec3; 3],
    pub n: [Direction; 3],
    pub material: usize,
}

impl Triangle {
    /// Unit normal from the winding (counter-clockwise front).
    pub fn face_normal(&self) -> Option<Direction> {
        Direction::new((self.p[1] - self.p[0]).cross(self.p[2] - self.p[0]))
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.p[1] - self.p[0]).cross(self.p[2] - self.p[0]).length()
    }
}

/// A named group of triangles sharing one material.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub triangles: Vec<Triangle>,
    pub material: usize,
}

impl Mesh {
    /// Builds a mesh from positions and triangle indices, using the face
    /// normal at every vertex.
    pub fn from_faces(name: &str, positions: &[Vec3], faces: &[[usize; 3]], material: usize) -> Result<Self, SceneError> {
        let mut triangles = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            let p = [positions[f[0]], positions[f[1]], positions[f[2]]];
            let n = Direction::new((p[1] - p[0]).cross(p[2] - p[0]))
                .ok_or_else(|| SceneError::Invalid(format!("mesh {name}: triangle {i} is degenerate")))?;
            triangles.push(Triangle { p, n: [n; 3], material });
        }
        Ok(Mesh { name: name.to_string(), triangles, material })
    }

    /// Axis-aligned-free parallelogram `corner + s·u + t·v`, `s, t ∈ [0, 1]`,
    /// front side along `u × v`.
    pub fn quad(name: &str, corner: Vec3, u: Vec3, v: Vec3, material: usize) -> Result<Self, SceneError> {
        let p = [corner, corner + u, corner + u + v, corner + v];
        Self::from_faces(name, &p, &[[0, 1, 2], [0, 2, 3]], material)
    }
}

/// A cone spot light with uniform radiant intensity inside the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotLight {
    pub position: Vec3,
    /// Cone axis; `frame.z == direction`. The tangent axes orient the RSM.
    pub frame: Frame,
    pub half_angle: f64,
    /// Total emitted power per channel.
    pub power: Rgb,
    pub rsm_resolution: usize,
}

impl SpotLight {
    pub fn new(position: Vec3, direction: Direction, half_angle: f64, power: Rgb, rsm_resolution: usize) -> Self {
        SpotLight { position, frame: Frame::from_normal(direction), half_angle, power, rsm_resolution }
    }

    pub fn direction(&self) -> Direction {
        self.frame.z
    }

    /// Solid angle of the cone.
    pub fn solid_angle(&self) -> f64 {
        2.0 * std::f64::consts::PI * (1.0 - self.half_angle.cos())
    }

    /// Radiant intensity toward `dir` (unit, pointing away from the light).
    pub fn intensity(&self, dir: Direction) -> Rgb {
        if dir.dot(self.direction()) >= self.half_angle.cos() {
            self.power / self.solid_angle()
        } else {
            Rgb::ZERO
        }
    }

    fn validate(&self, index: usize) -> Result<(), SceneError> {
        if !(self.half_angle > 0.0 && self.half_angle <= FRAC_PI_2 + 1e-12) {
            return Err(SceneError::Invalid(format!("light {index}: half angle must be in (0°, 90°]")));
        }
        if self.power.to_array().iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(SceneError::Invalid(format!("light {index}: power must be finite and non-negative")));
        }
        if self.rsm_resolution == 0 {
            return Err(SceneError::Invalid(format!("light {index}: rsm_resolution must be >= 1")));
        }
        if !self.position.is_finite() {
            return Err(SceneError::Invalid(format!("light {index}: position not finite")));
        }
        Ok(())
    }
}

/// Pinhole camera, one primary ray per pixel centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    /// `x` right, `y` up, `z` backwards (the view direction is `-z`).
    pub frame: Frame,
    pub vfov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3, vfov: f64, width: usize, height: usize) -> Result<Self, SceneError> {
        let back = Direction::new(position - target)
            .ok_or_else(|| SceneError::Invalid("camera position equals look_at".into()))?;
        let right = Direction::new(up.cross(back.vec()))
            .ok_or_else(|| SceneError::Invalid("camera up is parallel to the view direction".into()))?;
        let true_up = Direction::new_unchecked(back.vec().cross(right.vec()));
        if !(vfov > 0.0 && vfov < std::f64::consts::PI) {
            return Err(SceneError::Invalid("camera vfov must be in (0°, 180°)".into()));
        }
        if width == 0 || height == 0 {
            return Err(SceneError::Invalid("camera resolution must be positive".into()));
        }
        Ok(Camera { position, frame: Frame { x: right, y: true_up, z: back }, vfov, width, height })
    }

    /// Primary ray through the centre of pixel `(px, py)`, row 0 at the top.
    pub fn primary_ray(&self, px: usize, py: usize) -> Direction {
        let t = (0.5 * self.vfov).tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * t * aspect;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * t;
        Direction::new(self.frame.to_world(Vec3::new(sx, sy, -1.0))).expect("finite camera ray")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Direction,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Direction) -> Self {
        Ray { origin, dir, t_min: 0.0, t_max: f64::INFINITY }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir.vec() * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Interpolated shading normal as authored (not flipped toward the ray).
    pub normal: Direction,
    pub material: usize,
    pub triangle: usize,
}

/// An immutable, validated scene with its BVH.
#[derive(Debug, Clone)]
pub struct Scene {
    meshes: Vec<Mesh>,
    materials: Vec<BrdfModel>,
    lights: Vec<SpotLight>,
    camera: Camera,
    triangles: Vec<Triangle>,
    bvh: Bvh,
    diagonal: f64,
}

impl Scene {
    pub fn new(meshes: Vec<Mesh>, materials: Vec<BrdfModel>, lights: Vec<SpotLight>, camera: Camera) -> Result<Self, SceneError> {
        for (i, m) in materials.iter().enumerate() {
            m.validate().map_err(|source| SceneError::Material { index: i, source })?;
        }
        for (i, mesh) in meshes.iter().enumerate() {
            if mesh.material >= materials.len() {
                return Err(SceneError::Invalid(format!(
                    "mesh {i} ({}): material index {} out of range ({} materials)",
                    mesh.name,
                    mesh.material,
                    materials.len()
                )));
            }
            for (k, t) in mesh.triangles.iter().enumerate() {
                let finite = t.p.iter().all(|p| p.is_finite());
                let unit = t.n.iter().all(|n| (n.vec().length() - 1.0).abs() < 1e-9);
                if !finite || !unit {
                    return Err(SceneError::Invalid(format!("mesh {i} ({}): triangle {k} malformed", mesh.name)));
                }
            }
        }
        if lights.is_empty() {
            return Err(SceneError::Invalid("scene has no light".into()));
        }
        for (i, l) in lights.iter().enumerate() {
            l.validate(i)?;
        }
        let mut triangles = Vec::new();
        for mesh in &meshes {
            for t in &mesh.triangles {
                triangles.push(Triangle { material: mesh.material, ..t.clone() });
            }
        }
        let bvh = Bvh::build(&triangles);
        let diagonal = bvh.bounds().map(|(lo, hi)| (hi - lo).length()).unwrap_or(0.0);
        Ok(Scene { meshes, materials, lights, camera, triangles, bvh, diagonal })
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn materials(&self) -> &[BrdfModel] {
        &self.materials
    }

    pub fn lights(&self) -> &[SpotLight] {
        &self.lights
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Length of the bounding-box diagonal of all geometry.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// Self-intersection guard for secondary and shadow rays.
    pub fn epsilon(&self) -> f64 {
        1e-4 * self.diagonal.max(1e-12)
    }

    /// Nearest hit in `(t_min, t_max)`; ties go to the lowest triangle index.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.bvh.intersect(&self.triangles, ray).map(|(t, i, u, v)| self.hit_record(ray, t, i, u, v))
    }

    /// Nearest hit by testing every triangle.
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<(f64, usize, f64, f64)> = None;
        for (i, tri) in self.triangles.iter().enumerate() {
            if let Some((t, u, v)) = bvh::intersect_triangle(tri, ray) {
                if best.is_none_or(|b| t < b.0) {
                    best = Some((t, i, u, v));
                }
            }
        }
        best.map(|(t, i, u, v)| self.hit_record(ray, t, i, u, v))
    }

    /// Every hit in `(t_min, t_max)`, sorted by distance.
    pub fn intersect_all(&self, ray: &Ray) -> Vec<Hit> {
        let mut hits = Vec::new();
        self.bvh.intersect_all(&self.triangles, ray, &mut |t, i, u, v| hits.push((t, i, u, v)));
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(t, i, u, v)| self.hit_record(ray, t, i, u, v)).collect()
    }

    /// Every hit along `ray`, in a fixed traversal order (not by distance).
    pub fn for_each_hit(&self, ray: &Ray, mut f: impl FnMut(Hit)) {
        self.bvh.intersect_all(&self.triangles, ray, &mut |t, i, u, v| f(self.hit_record(ray, t, i, u, v)));
    }

    /// Whether anything lies strictly between `a` and `b`, with both ends
    /// pulled in by [`Scene::epsilon`].
    pub fn occluded(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let len = d.length();
        let eps = self.epsilon();
        if len <= 2.0 * eps {
            return false;
        }
        let ray = Ray { origin: a, dir: Direction::new_unchecked(d / len), t_min: eps, t_max: len - eps };
        self.bvh.any_hit(&self.triangles, &ray)
    }

    fn hit_record(&self, ray: &Ray, t: f64, i: usize, u: f64, v: f64) -> Hit {
        let tri = &self.triangles[i];
        let n = tri.n[0].vec() * (1.0 - u - v) + tri.n[1].vec() * u + tri.n[2].vec() * v;
        let normal = Direction::new(n).or_else(|| tri.face_normal()).unwrap_or(tri.n[0]);
        Hit { t, point: ray.at(t), normal, material: tri.material, triangle: i }
    }

    /// The same scene moved by a rigid transform (geometry, lights, camera).
    pub fn transformed(&self, xf: &Rigid) -> Result<Scene, SceneError> {
        let frame = |f: &Frame| Frame {
            x: xf.apply_direction(f.x),
            y: xf.apply_direction(f.y),
            z: xf.apply_direction(f.z),
        };
        let meshes = self
            .meshes
            .iter()
            .map(|m| Mesh {
                name: m.name.clone(),
                material: m.material,
                triangles: m
                    .triangles
                    .iter()
                    .map(|t| Triangle {
                        p: t.p.map(|p| xf.apply_point(p)),
                        n: t.n.map(|n| xf.apply_direction(n)),
                        material: t.material,
                    })
                    .collect(),
            })
            .collect();
        let lights = self
            .lights
            .iter()
            .map(|l| SpotLight { position: xf.apply_point(l.position), frame: frame(&l.frame), ..l.clone() })
            .collect();
        let camera = Camera { position: xf.apply_point(self.camera.position), frame: frame(&self.camera.frame), ..self.camera.clone() };
        Scene::new(meshes, self.materials.clone(), lights, camera)
    }

    /// Replaces every light's power by `s` times its value.
    pub fn with_light_power_scaled(&self, s: f64) -> Scene {
        let mut out = self.clone();
        for l in &mut out.lights {
            l.power *= s;
        }
        out
    }

    pub fn with_camera(&self, camera: Camera) -> Scene {
        Scene { camera, ..self.clone() }
    }

    pub fn with_lights(&self, lights: Vec<SpotLight>) -> Result<Scene, SceneError> {
        for (i, l) in lights.iter().enumerate() {
            l.validate(i)?;
        }
        Ok(Scene { lights, ..self.clone() })
    }

    pub fn with_materials(&self, materials: Vec<BrdfModel>) -> Result<Scene, SceneError> {
        Scene::new(self.meshes.clone(), materials, self.lights.clone(), self.camera.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle_scene() -> Scene {
        let mesh = Mesh::from_faces(
            "tri",
            &[Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            &[[0, 1, 2]],
            0,
        )
        .unwrap();
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 5.0), Vec3::ZERO, Vec3::Y, 0.8, 4, 4).unwrap();
        let light = SpotLight::new(Vec3::new(0.0, 0.0, 3.0), -Direction::Z, 0.5, Rgb::splat(1.0), 8);
        Scene::new(vec![mesh], vec![BrdfModel::lambertian(Rgb::splat(0.5))], vec![light], cam).unwrap()
    }

    #[test]
    fn perpendicular_ray_at_triangle_centre() {
        let s = unit_triangle_scene();
        let c = Vec3::new(1.0 / 3.0, 1.0 / 3.0, 0.0);
        let hit = s.intersect(&Ray::new(c + Vec3::Z * 2.5, -Direction::Z)).unwrap();
        assert!((hit.t - 2.5).abs() < 1e-12);
        assert!((hit.normal.z() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let s = unit_triangle_scene();
        assert!(s.intersect(&Ray::new(Vec3::new(-1.0, 0.2, 0.5), Direction::X)).is_none());
        assert!(s.intersect(&Ray::new(Vec3::new(-1.0, 0.2, 0.0), Direction::X)).is_none());
    }

    #[test]
    fn occlusion_queries() {
        let s = unit_triangle_scene();
        assert!(s.occluded(Vec3::new(0.2, 0.2, 1.0), Vec3::new(0.2, 0.2, -1.0)));
        assert!(!s.occluded(Vec3::new(0.2, 0.2, 1.0), Vec3::new(0.2, 0.2, 0.5)));
        // both ends on the surface, one lifted along the normal
        assert!(!s.occluded(Vec3::new(0.2, 0.2, 0.0), Vec3::new(0.3, 0.1, 0.0) + Vec3::Z * 1e-3));
    }

    #[test]
    fn validation_errors() {
        let s = unit_triangle_scene();
        let bad = Mesh { material: 3, ..s.meshes()[0].clone() };
        let err = Scene::new(vec![bad], s.materials().to_vec(), s.lights().to_vec(), s.camera().clone()).unwrap_err();
        assert!(err.to_string().contains("mesh 0 (tri)"), "{err}");
        let err = Scene::new(s.meshes().to_vec(), s.materials().to_vec(), vec![], s.camera().clone()).unwrap_err();
        assert!(err.to_string().contains("no light"));
        let mut l = s.lights()[0].clone();
        l.half_angle = 2.0;
        assert!(Scene::new(s.meshes().to_vec(), s.materials().to_vec(), vec![l], s.camera().clone()).is_err());
    }

    #[test]
    fn camera_rays_are_centred() {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 5.0), Vec3::ZERO, Vec3::Y, 0.8, 3, 3).unwrap();
        let d = cam.primary_ray(1, 1);
        assert!((d.z() + 1.0).abs() < 1e-12);
        assert!(cam.primary_ray(0, 0).y() > 0.0);
        assert!(cam.primary_ray(0, 0).x() < 0.0);
    }

    #[test]
    fn spot_intensity_integrates_to_power() {
        let l = SpotLight::new(Vec3::ZERO, Direction::Z, 0.6, Rgb::new(3.0, 2.0, 1.0), 8);
        let i = l.intensity(Direction::Z);
        assert!((i * l.solid_angle() - l.power).length() < 1e-12);
        assert_eq!(l.intensity(Direction::X), Rgb::ZERO);
    }
}
