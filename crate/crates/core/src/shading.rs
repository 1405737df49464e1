//! Lighting estimators: HVL gathering (full SH and the ZH-only fast path),
//! direct lighting from spot lights, and the VPL, VSL and one-bounce path
//! tracing baselines.
//!
//! Surfaces are one-sided: a point reflects only when both the incoming and
//! the outgoing direction lie above its shading normal.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brdf::{BrdfError, BrdfModel, BrdfTable, DEFAULT_THETA_STEPS};
use crate::lights::{concentric_disk, disk_to_cone, Hvl};
use crate::math::{smoothstep, Direction, Frame, Rgb, Vec3};
use crate::scene::{Hit, Ray, Scene, SpotLight};
use crate::sh::{
    eval_basis_into, hann_weight, illuminance, project_zonal, zh_cap_into, zh_convolve, zh_reconstruct, zh_rotate_into,
    ZhVector, MAX_BANDS,
};

#[derive(Debug, Error)]
pub enum ShadingError {
    #[error("material {0} has no circular-symmetric lobe (GGX); the ZH fast path needs lambertian or phong")]
    NotZhCompatible(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Brdf(#[from] BrdfError),
}

/// A visible surface point to shade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadePoint {
    pub x: Vec3,
    pub n: Direction,
    /// Toward the camera.
    pub wo: Direction,
    pub material: usize,
}

impl ShadePoint {
    /// Shade point of a camera hit, `None` when the back face is seen.
    pub fn from_hit(hit: &Hit, ray_dir: Direction) -> Option<ShadePoint> {
        let wo = -ray_dir;
        (hit.normal.dot(wo) > 0.0).then_some(ShadePoint { x: hit.point, n: hit.normal, wo, material: hit.material })
    }

    /// Shading frame: `z = n`, `wo` in the xz half-plane.
    pub fn frame(&self) -> Frame {
        Frame::from_normal_and_hint(self.n, self.wo.vec())
    }

    fn theta_o(&self) -> f64 {
        self.n.dot(self.wo).clamp(-1.0, 1.0).acos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Hvl,
    HvlZhFast,
    Vpl,
    Vsl,
    Path,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatherConfig {
    pub bands_emission: usize,
    pub bands_gather: usize,
    pub mode: Mode,
    pub vsl_samples: usize,
    pub path_samples: usize,
    pub vpl_clamp: Option<f64>,
    /// Path oracle only: trace secondary rays with occlusion (`true`) or
    /// count every surface along the ray, as HVL gathering does (`false`).
    pub path_visibility: bool,
}

impl Default for GatherConfig {
    fn default() -> Self {
        GatherConfig {
            bands_emission: 3,
            bands_gather: 5,
            mode: Mode::Hvl,
            vsl_samples: 25,
            path_samples: 256,
            vpl_clamp: None,
            path_visibility: true,
        }
    }
}

impl GatherConfig {
    pub fn validate(&self) -> Result<(), ShadingError> {
        for (name, b) in [("emission", self.bands_emission), ("gather", self.bands_gather)] {
            if b == 0 || b > MAX_BANDS {
                return Err(ShadingError::Config(format!("{name} bands {b} outside [1, {MAX_BANDS}]")));
            }
        }
        if self.vsl_samples == 0 || self.path_samples == 0 {
            return Err(ShadingError::Config("sample counts must be >= 1".into()));
        }
        if let Some(c) = self.vpl_clamp {
            if c.is_nan() || c <= 0.0 {
                return Err(ShadingError::Config(format!("vpl clamp {c} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-material BRDF tables (emission `F′` and gather `F`) plus the ZH lobe
/// used by the fast path.
#[derive(Debug, Clone)]
pub struct ShadingTables {
    materials: Vec<BrdfModel>,
    bands_emission: usize,
    bands_gather: usize,
    emission: Vec<BrdfTable>,
    gather: Vec<BrdfTable>,
    /// Phong lobe `(n+2)/(2π) t^n` about the mirror direction, windowed.
    lobes: Vec<Option<ZhVector>>,
}

impl ShadingTables {
    /// Tabulates every material at both band counts, through the on-disk
    /// cache when `cache` is given.
    pub fn build(
        materials: &[BrdfModel],
        bands_emission: usize,
        bands_gather: usize,
        cache: Option<&Path>,
    ) -> Result<Self, ShadingError> {
        let make = |m: &BrdfModel, bands: usize| -> Result<BrdfTable, BrdfError> {
            match cache {
                Some(dir) => BrdfTable::cached(m, bands, DEFAULT_THETA_STEPS, dir),
                None => BrdfTable::tabulate(m, bands, DEFAULT_THETA_STEPS),
            }
        };
        let mut emission = Vec::with_capacity(materials.len());
        let mut gather = Vec::with_capacity(materials.len());
        for m in materials {
            let g = make(m, bands_gather)?;
            let e = if bands_emission == bands_gather { g.clone() } else { make(m, bands_emission)? };
            emission.push(e);
            gather.push(g);
        }
        let lobes = materials
            .iter()
            .map(|m| match *m {
                BrdfModel::Phong { exponent, .. } => Some(phong_lobe_zh(exponent, bands_gather)),
                _ => None,
            })
            .collect();
        Ok(ShadingTables { materials: materials.to_vec(), bands_emission, bands_gather, emission, gather, lobes })
    }

    pub fn materials(&self) -> &[BrdfModel] {
        &self.materials
    }

    pub fn bands_emission(&self) -> usize {
        self.bands_emission
    }

    pub fn bands_gather(&self) -> usize {
        self.bands_gather
    }

    pub fn emission(&self, material: usize) -> &BrdfTable {
        &self.emission[material]
    }

    pub fn gather(&self, material: usize) -> &BrdfTable {
        &self.gather[material]
    }
}

fn window_weight(l: usize, bands: usize) -> f64 {
    if l < bands {
        hann_weight(l, bands)
    } else {
        0.0
    }
}

fn phong_lobe_zh(exponent: f64, bands: usize) -> ZhVector {
    let mut zh = project_zonal(
        |t| crate::brdf::phong_lobe(t, exponent),
        bands,
        &[(0.0, 1.0)],
        (exponent.ceil() as usize / 2 + 8).clamp(32, 512),
    );
    for (l, c) in zh.coeffs_mut().iter_mut().enumerate() {
        *c *= window_weight(l, bands);
    }
    zh
}

/// Half-angle of the cap subtended by a sphere of radius `r` at distance
/// `d`; `π/2` from inside the sphere.
pub fn cap_half_angle(r: f64, d: f64) -> f64 {
    if d <= r {
        FRAC_PI_2
    } else {
        (r / d).min(1.0).asin()
    }
}

/// Smoothstep estimate of the fraction of a cap (axis `w_j`, half-angle `a`)
/// above the plane of `n_x`.
pub fn hemisphere_coverage(n_x: Direction, w_j: Direction, a: f64) -> f64 {
    let theta = n_x.dot(w_j).clamp(-1.0, 1.0).acos();
    let hi = a + FRAC_PI_2;
    let lo = a - FRAC_PI_2;
    smoothstep(((hi - theta.clamp(lo, hi)) / (2.0 * a)).clamp(0.0, 1.0))
}

/// Unit vector and distance from `x` to the HVL centre.
fn toward(x: Vec3, y: Vec3) -> Option<(Direction, f64)> {
    let v = y - x;
    let d = v.length();
    (d > 0.0).then(|| (Direction::new_unchecked(v / d), d))
}

/// `max(0, n_j·(−ω_j)) · H / (π r²)`.
fn geometric_factor(hvl: &Hvl, n_x: Direction, w_j: Direction, a: f64) -> f64 {
    let cos_y = -hvl.normal.dot(w_j);
    if cos_y <= 0.0 {
        return 0.0;
    }
    cos_y * hemisphere_coverage(n_x, w_j, a) / (PI * hvl.radius * hvl.radius)
}

fn clamp_rgb(c: Rgb) -> Rgb {
    c.max(Rgb::ZERO)
}

/// HVL radiance toward `x`, from the SH `F′` table of the HVL's material
/// (`table`), reconstructed in the HVL frame (`z = n_j`, `ω_l` in xz).
pub fn hvl_emission(hvl: &Hvl, x: Vec3, n_x: Direction, table: &BrdfTable) -> Rgb {
    let mut basis = vec![0.0; table.bands() * table.bands()];
    hvl_emission_with(hvl, x, n_x, table, &mut basis)
}

fn hvl_emission_with(hvl: &Hvl, x: Vec3, n_x: Direction, table: &BrdfTable, basis: &mut [f64]) -> Rgb {
    let Some((w_j, d)) = toward(x, hvl.position) else { return Rgb::ZERO };
    let a = cap_half_angle(hvl.radius, d);
    let g = geometric_factor(hvl, n_x, w_j, a);
    if g == 0.0 {
        return Rgb::ZERO;
    }
    let frame = Frame::from_normal_and_hint(hvl.normal, hvl.to_light.vec());
    let theta = hvl.normal.dot(hvl.to_light).clamp(-1.0, 1.0).acos();
    eval_basis_into(table.bands(), frame.to_local_dir(-w_j), basis);
    hvl.flux * clamp_rgb(table.lookup(theta, true).dot_basis(basis)) * g
}

/// HVL radiance toward `x` with the parametric BRDF instead of SH.
pub fn hvl_emission_parametric(hvl: &Hvl, x: Vec3, n_x: Direction, model: &BrdfModel) -> Rgb {
    let Some((w_j, d)) = toward(x, hvl.position) else { return Rgb::ZERO };
    let a = cap_half_angle(hvl.radius, d);
    let g = geometric_factor(hvl, n_x, w_j, a);
    if g == 0.0 {
        return Rgb::ZERO;
    }
    hvl.flux * model.eval(hvl.to_light, -w_j, hvl.normal) * g
}

/// Scratch buffers for one gather; sized for the table band counts.
struct Scratch {
    cap: Vec<f64>,
    rotated: Vec<f64>,
    emission: Vec<f64>,
}

impl Scratch {
    fn new(tables: &ShadingTables) -> Self {
        let g = tables.bands_gather;
        let e = tables.bands_emission;
        Scratch { cap: vec![0.0; g], rotated: vec![0.0; g * g], emission: vec![0.0; e * e] }
    }
}

fn hvl_contribution_with(
    sp: &ShadePoint,
    frame: &Frame,
    f: &crate::brdf::RgbSh,
    hvl: &Hvl,
    tables: &ShadingTables,
    s: &mut Scratch,
) -> Rgb {
    let emission = hvl_emission_with(hvl, sp.x, sp.n, &tables.emission[hvl.material], &mut s.emission);
    if emission == Rgb::ZERO {
        return Rgb::ZERO;
    }
    let (w_j, d) = toward(sp.x, hvl.position).expect("emission is zero at the centre");
    let a = cap_half_angle(hvl.radius, d);
    zh_cap_into(a.cos(), &mut s.cap);
    zh_rotate_into(&s.cap, frame.to_local_dir(w_j), &mut s.rotated);
    emission * clamp_rgb(f.dot_basis(&s.rotated))
}

/// Outgoing radiance at `sp` from one HVL: emission times the cap projected
/// against the fragment's `F` (frame `z = n_x`, `ω_o` in xz).
pub fn hvl_contribution(sp: &ShadePoint, hvl: &Hvl, tables: &ShadingTables) -> Rgb {
    let frame = sp.frame();
    let f = tables.gather[sp.material].lookup(sp.theta_o(), false);
    hvl_contribution_with(sp, &frame, f, hvl, tables, &mut Scratch::new(tables))
}

/// Sum of HVL contributions in index order.
pub fn gather_indirect(sp: &ShadePoint, hvls: &[Hvl], tables: &ShadingTables) -> Rgb {
    let frame = sp.frame();
    let f = tables.gather[sp.material].lookup(sp.theta_o(), false);
    let mut s = Scratch::new(tables);
    hvls.iter().fold(Rgb::ZERO, |acc, h| acc + hvl_contribution_with(sp, &frame, f, h, tables, &mut s))
}

/// ZH-only gathering: three-band illuminance for the diffuse part, a ZH
/// convolution with the Phong lobe for the specular part, and emission from
/// the parametric BRDF.
pub fn gather_indirect_zh_fast(sp: &ShadePoint, hvls: &[Hvl], tables: &ShadingTables) -> Result<Rgb, ShadingError> {
    let model = &tables.materials[sp.material];
    if !model.is_zh_compatible() {
        return Err(ShadingError::NotZhCompatible(sp.material));
    }
    let bands = tables.bands_gather;
    let diffuse = model.diffuse_albedo() / PI;
    let specular = match (model, &tables.lobes[sp.material]) {
        (BrdfModel::Phong { specular, .. }, Some(lobe)) => Some((*specular, lobe)),
        _ => None,
    };
    let mirror = sp.wo.reflect(sp.n);
    let mut cap3 = vec![0.0; 3];
    let mut cap = vec![0.0; bands];
    let mut sum = Rgb::ZERO;
    for hvl in hvls {
        let emission = hvl_emission_parametric(hvl, sp.x, sp.n, &tables.materials[hvl.material]);
        if emission == Rgb::ZERO {
            continue;
        }
        let (w_j, d) = toward(sp.x, hvl.position).expect("emission is zero at the centre");
        let a = cap_half_angle(hvl.radius, d);
        let alpha = a.cos();
        zh_cap_into(alpha, &mut cap3);
        for (l, c) in cap3.iter_mut().enumerate() {
            *c *= window_weight(l, bands);
        }
        let cap_zh = ZhVector::from_coeffs(cap3.clone()).expect("finite cap");
        let e = illuminance(w_j.dot(sp.n), &cap_zh).expect("three bands").max(0.0);
        let mut reflected = diffuse * e;
        if let Some((spec, lobe)) = specular {
            zh_cap_into(alpha, &mut cap);
            let cap_zh = ZhVector::from_coeffs(cap.clone()).expect("finite cap");
            let h = zh_convolve(&cap_zh, lobe).expect("equal bands");
            let cos_x = sp.n.dot(w_j).max(0.0);
            reflected += spec * (zh_reconstruct(&h, w_j.dot(mirror)).max(0.0) * cos_x);
        }
        sum += emission * reflected;
    }
    Ok(sum)
}

/// Direct radiance from a spot light via the Dirac projection of the light
/// against the fragment's `F`. With `occluders`, shadowed points get zero.
pub fn direct_lighting(sp: &ShadePoint, light: &SpotLight, tables: &ShadingTables, occluders: Option<&Scene>) -> Rgb {
    let Some((to_light, d)) = toward(sp.x, light.position) else { return Rgb::ZERO };
    let intensity = light.intensity(-to_light);
    if intensity == Rgb::ZERO || sp.n.dot(to_light) <= 0.0 {
        return Rgb::ZERO;
    }
    if occluders.is_some_and(|s| s.occluded(sp.x, light.position)) {
        return Rgb::ZERO;
    }
    let table = &tables.gather[sp.material];
    let mut basis = vec![0.0; table.bands() * table.bands()];
    eval_basis_into(table.bands(), sp.frame().to_local_dir(to_light), &mut basis);
    intensity / (d * d) * clamp_rgb(table.lookup(sp.theta_o(), false).dot_basis(&basis))
}

/// Virtual point light: `Φ f_y cos_y f_x cos_x / d²`, optionally clamped
/// per channel.
pub fn vpl_contribution(sp: &ShadePoint, hvl: &Hvl, materials: &[BrdfModel], clamp: Option<f64>) -> Rgb {
    let Some((w_j, d)) = toward(sp.x, hvl.position) else { return Rgb::ZERO };
    let cos_y = -hvl.normal.dot(w_j);
    let cos_x = sp.n.dot(w_j);
    if cos_y <= 0.0 || cos_x <= 0.0 {
        return Rgb::ZERO;
    }
    let fy = materials[hvl.material].eval(hvl.to_light, -w_j, hvl.normal);
    let fx = materials[sp.material].eval(w_j, sp.wo, sp.n);
    let c = hvl.flux * fy * fx * (cos_y * cos_x / (d * d));
    match clamp {
        Some(m) => c.min(Rgb::splat(m)),
        None => c,
    }
}

/// Sum of VPL contributions in index order.
pub fn gather_vpl(sp: &ShadePoint, hvls: &[Hvl], materials: &[BrdfModel], clamp: Option<f64>) -> Rgb {
    hvls.iter().fold(Rgb::ZERO, |acc, h| acc + vpl_contribution(sp, h, materials, clamp))
}

/// Two uniforms in `[-1, 1)` from one 64-bit draw.
fn signed_pair(rng: &mut impl RngCore) -> (f64, f64) {
    const S: f64 = 1.0 / (1u64 << 31) as f64;
    let r = rng.next_u64();
    ((r >> 32) as f64 * S - 1.0, (r & 0xffff_ffff) as f64 * S - 1.0)
}

/// Uniform point in the unit disk by rejection.
fn disk_point(rng: &mut impl RngCore) -> (f64, f64) {
    loop {
        let (u, v) = signed_pair(rng);
        if u * u + v * v <= 1.0 {
            return (u, v);
        }
    }
}

/// Virtual spherical light: parametric emission times a Monte-Carlo
/// estimate of `∫_Q f_s(x) cos⁺ dω` over the cap, sampled uniformly.
pub fn vsl_contribution(
    sp: &ShadePoint,
    hvl: &Hvl,
    materials: &[BrdfModel],
    samples: usize,
    rng: &mut impl RngCore,
) -> Rgb {
    let emission = hvl_emission_parametric(hvl, sp.x, sp.n, &materials[hvl.material]);
    if emission == Rgb::ZERO {
        return Rgb::ZERO;
    }
    let (w_j, d) = toward(sp.x, hvl.position).expect("emission is zero at the centre");
    let a = cap_half_angle(hvl.radius, d);
    let k = 2.0 * (0.5 * a).sin().powi(2);
    let solid_angle = 2.0 * PI * k;
    let frame = Frame::from_normal_and_hint(w_j, sp.n.vec());
    let model = &materials[sp.material];
    let integral = if let BrdfModel::Lambertian { albedo } = *model {
        // f_s is constant: only the clamped cosine is sampled.
        let n = frame.to_local(sp.n.vec());
        albedo / PI * cone_integral(k, samples, rng, |w| w.dot(n).max(0.0))
    } else {
        let mut acc = Rgb::ZERO;
        for _ in 0..samples {
            let (u, v) = disk_point(rng);
            let w = Direction::new_unchecked(frame.to_world(disk_to_cone(u, v, k)));
            let c = sp.n.dot(w);
            if c > 0.0 {
                acc += model.eval(w, sp.wo, sp.n) * c;
            }
        }
        acc * (solid_angle / samples as f64)
    };
    emission * integral
}

/// `|Q|/N Σ f(ω_s)` over `samples` uniform directions in the cone about
/// local `+z` with `k = 1 − cos a`.
pub fn cone_integral(k: f64, samples: usize, rng: &mut impl RngCore, mut f: impl FnMut(Vec3) -> f64) -> f64 {
    let mut acc = 0.0;
    for _ in 0..samples {
        let (u, v) = disk_point(rng);
        acc += f(disk_to_cone(u, v, k));
    }
    acc * (2.0 * PI * k / samples as f64)
}

/// Sum of VSL contributions in index order. Each light draws from its own
/// generator seeded by `rng`, so a light that is skipped (zero emission)
/// does not shift the samples of the lights after it.
pub fn gather_vsl(sp: &ShadePoint, hvls: &[Hvl], materials: &[BrdfModel], samples: usize, rng: &mut impl RngCore) -> Rgb {
    hvls.iter().fold(Rgb::ZERO, |acc, h| {
        let mut sub = ChaCha8Rng::seed_from_u64(rng.next_u64());
        acc + vsl_contribution(sp, h, materials, samples, &mut sub)
    })
}

/// Exact direct radiance leaving `hit` toward `wo`, with shadow rays.
pub fn direct_at_surface(scene: &Scene, hit: &Hit, wo: Direction) -> Rgb {
    if hit.normal.dot(wo) <= 0.0 {
        return Rgb::ZERO;
    }
    let model = &scene.materials()[hit.material];
    let mut sum = Rgb::ZERO;
    for light in scene.lights() {
        let Some((to_light, d)) = toward(hit.point, light.position) else { continue };
        let cos = hit.normal.dot(to_light);
        if cos <= 0.0 {
            continue;
        }
        let intensity = light.intensity(-to_light);
        if intensity == Rgb::ZERO || scene.occluded(hit.point, light.position) {
            continue;
        }
        sum += intensity * model.eval(to_light, wo, hit.normal) * (cos / (d * d));
    }
    sum
}

/// One-bounce indirect radiance at `sp` by cosine-weighted hemisphere
/// sampling. Without visibility every surface crossed by a secondary ray
/// contributes, not just the nearest.
pub fn path_trace_indirect(
    sp: &ShadePoint,
    scene: &Scene,
    samples: usize,
    visibility: bool,
    rng: &mut impl Rng,
) -> Rgb {
    let model = &scene.materials()[sp.material];
    let frame = sp.frame();
    let eps = scene.epsilon();
    let mut sum = Rgb::ZERO;
    for _ in 0..samples {
        let (u, v) = concentric_disk(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0);
        let local = Vec3::new(u, v, (1.0 - u * u - v * v).max(0.0).sqrt());
        let Some(w) = Direction::new(frame.to_world(local)) else { continue };
        let fx = model.eval(w, sp.wo, sp.n);
        if fx == Rgb::ZERO {
            continue;
        }
        let ray = Ray { origin: sp.x, dir: w, t_min: eps, t_max: f64::INFINITY };
        let mut radiance = Rgb::ZERO;
        if visibility {
            if let Some(hit) = scene.intersect(&ray) {
                radiance = direct_at_surface(scene, &hit, -w);
            }
        } else {
            scene.for_each_hit(&ray, |hit| radiance += direct_at_surface(scene, &hit, -w));
        }
        sum += fx * radiance;
    }
    sum * (PI / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lights::Hvl;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lambert(r: f64) -> BrdfModel {
        BrdfModel::lambertian(Rgb::splat(r))
    }

    fn hvl_at(position: Vec3, normal: Direction, radius: f64) -> Hvl {
        Hvl {
            position,
            normal,
            flux: Rgb::splat(1.0),
            radius,
            material: 0,
            to_light: normal,
            depth: 1.0,
            pixel: (0, 0),
        }
    }

    #[test]
    fn cap_half_angle_examples() {
        assert_eq!(cap_half_angle(1.0, 1.0), FRAC_PI_2);
        assert_eq!(cap_half_angle(2.0, 1.0), FRAC_PI_2);
        assert!((cap_half_angle(0.5, 1.0) - PI / 6.0).abs() < 1e-15);
        for ratio in [0.001, 0.01, 0.05, 0.099] {
            let a = cap_half_angle(ratio, 1.0);
            assert!((a - ratio).abs() / a < 0.01);
        }
    }

    #[test]
    fn coverage_examples() {
        let n = Direction::Z;
        for a in [0.01, 0.3, 1.0, FRAC_PI_2] {
            let side = Direction::from_spherical(FRAC_PI_2, 0.3);
            assert!((hemisphere_coverage(n, side, a) - 0.5).abs() < 1e-12);
            let below = Direction::from_spherical((FRAC_PI_2 + a).min(PI), 0.0);
            assert!(hemisphere_coverage(n, below, a) < 1e-12);
            let above = Direction::from_spherical(FRAC_PI_2 - a, 0.0);
            assert!((hemisphere_coverage(n, above, a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_emission_ignores_direction() {
        let tables = ShadingTables::build(&[lambert(0.5)], 1, 3, None).unwrap();
        let h = hvl_at(Vec3::ZERO, Direction::Z, 0.1);
        let up = Direction::Z;
        let e = |p: Vec3| {
            let w = Direction::new(-p).unwrap();
            hvl_emission(&h, p, up, tables.emission(0)) / (-h.normal.dot(w))
        };
        let a = e(Vec3::new(0.0, 0.0, 2.0));
        let b = e(Vec3::new(1.0, 0.3, 2.0));
        assert!((a - b).max_element() < 1e-12 && (b - a).max_element() < 1e-12);
        assert_eq!(hvl_emission(&h, Vec3::new(0.0, 0.0, -2.0), up, tables.emission(0)), Rgb::ZERO);
    }

    #[test]
    fn lambertian_emission_straight_up() {
        let tables = ShadingTables::build(&[lambert(0.6)], 3, 3, None).unwrap();
        let mut h = hvl_at(Vec3::ZERO, Direction::Z, 0.1);
        h.to_light = Direction::from_xyz(0.4, 0.0, 1.0).unwrap();
        let x = Vec3::new(0.0, 0.0, 3.0);
        let n_x = Direction::from_xyz(0.0, 0.0, -1.0).unwrap();
        let e = hvl_emission(&h, x, n_x, tables.emission(0));
        let expect = 0.6 / PI / (PI * 0.01);
        assert!((e.x - expect).abs() / expect < 0.05, "{} vs {expect}", e.x);
    }

    #[test]
    fn hvl_behind_fragment_is_dark() {
        let tables = ShadingTables::build(&[lambert(0.8)], 3, 5, None).unwrap();
        let sp = ShadePoint { x: Vec3::ZERO, n: Direction::Z, wo: Direction::Z, material: 0 };
        let a = cap_half_angle(0.2, 1.0);
        let below = Direction::from_spherical(FRAC_PI_2 + a + 1e-6, 0.0);
        let h = hvl_at(below.vec(), -below, 0.2);
        assert_eq!(hvl_contribution(&sp, &h, &tables), Rgb::ZERO);
    }

    #[test]
    fn contribution_linear_in_flux() {
        let tables = ShadingTables::build(&[lambert(0.8)], 3, 5, None).unwrap();
        let sp = ShadePoint { x: Vec3::ZERO, n: Direction::Z, wo: Direction::Z, material: 0 };
        let mut h = hvl_at(Vec3::new(0.5, 0.2, 1.0), Direction::from_xyz(-0.3, 0.0, -1.0).unwrap(), 0.1);
        let c1 = hvl_contribution(&sp, &h, &tables);
        h.flux *= 2.0;
        assert_eq!(hvl_contribution(&sp, &h, &tables), c1 * 2.0);
        assert!(c1.x > 0.0);
        assert_eq!(gather_indirect(&sp, &[], &tables), Rgb::ZERO);
        let mut half = h.clone();
        half.flux = h.flux * 0.5;
        assert_eq!(gather_indirect(&sp, &[half.clone(), half], &tables), hvl_contribution(&sp, &h, &tables));
    }

    #[test]
    fn zh_fast_full_sphere_gives_albedo() {
        let albedo = Rgb::new(0.2, 0.5, 0.7);
        let tables = ShadingTables::build(&[BrdfModel::lambertian(albedo)], 3, 5, None).unwrap();
        let mut cap = vec![0.0; 3];
        zh_cap_into(PI.cos(), &mut cap);
        let e = illuminance(0.4, &ZhVector::from_coeffs(cap).unwrap()).unwrap();
        assert!((e - PI).abs() < 1e-4);
        let out = tables.materials()[0].diffuse_albedo() / PI * e;
        assert!((out - albedo).max_element().abs() < 1e-4);
    }

    #[test]
    fn zh_fast_rejects_ggx() {
        let tables = ShadingTables::build(&[BrdfModel::ggx(Rgb::splat(0.5), 0.5)], 3, 3, None).unwrap();
        let sp = ShadePoint { x: Vec3::ZERO, n: Direction::Z, wo: Direction::Z, material: 0 };
        assert!(matches!(gather_indirect_zh_fast(&sp, &[], &tables), Err(ShadingError::NotZhCompatible(0))));
    }

    #[test]
    fn vpl_examples() {
        let m = [lambert(0.5)];
        let sp = ShadePoint { x: Vec3::ZERO, n: Direction::Z, wo: Direction::Z, material: 0 };
        let down = Direction::from_xyz(0.0, 0.0, -1.0).unwrap();
        let far = vpl_contribution(&sp, &hvl_at(Vec3::new(0.3, 0.0, 2.0), down, 0.0), &m, None);
        let near = vpl_contribution(&sp, &hvl_at(Vec3::new(0.15, 0.0, 1.0), down, 0.0), &m, None);
        assert!((near.x / far.x - 4.0).abs() < 1e-12);
        assert_eq!(vpl_contribution(&sp, &hvl_at(Vec3::new(0.0, 0.0, 1.0), Direction::Z, 0.0), &m, None), Rgb::ZERO);
        assert_eq!(vpl_contribution(&sp, &hvl_at(Vec3::new(0.0, 0.0, -1.0), Direction::Z, 0.0), &m, None), Rgb::ZERO);
        let clamped = vpl_contribution(&sp, &hvl_at(Vec3::new(0.15, 0.0, 1.0), down, 0.0), &m, Some(1e-4));
        assert_eq!(clamped, Rgb::splat(1e-4));
    }

    #[test]
    fn cone_samples_are_uniform() {
        // Mean of cos θ over a uniform cap is (1 + cos a) / 2.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: f64 = 0.8;
        let k = 2.0 * (0.5 * a).sin().powi(2);
        let n = 200_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let (u, v) = disk_point(&mut rng);
            let w = disk_to_cone(u, v, k);
            assert!((w.length() - 1.0).abs() < 1e-12);
            assert!(w.z >= a.cos() - 1e-12);
            mean += w.z;
        }
        mean /= n as f64;
        assert!((mean - 0.5 * (1.0 + a.cos())).abs() < 1e-3);
    }

    #[test]
    fn cone_integral_of_a_constant_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, n) in [(0.1, 1), (0.5, 7), (1.0, 100)] {
            let q = 2.0 * PI * k;
            assert!((cone_integral(k, n, &mut rng, |_| 2.5) - 2.5 * q).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn vsl_tiny_cap_matches_vpl() {
        let m = [lambert(0.5)];
        let sp = ShadePoint { x: Vec3::ZERO, n: Direction::Z, wo: Direction::Z, material: 0 };
        let h = hvl_at(Vec3::new(0.0, 0.0, 1.0), Direction::from_xyz(0.0, 0.0, -1.0).unwrap(), 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = vsl_contribution(&sp, &h, &m, 1, &mut rng);
        let v = vpl_contribution(&sp, &h, &m, None);
        assert!((c.x - v.x).abs() / v.x < 1e-9);
    }

    #[test]
    fn path_black_scene_is_black() {
        let scene = crate::scene::fixtures::cornell();
        let black = vec![lambert(0.0); scene.materials().len()];
        let scene = scene.with_materials(black).unwrap();
        let sp = ShadePoint { x: Vec3::new(0.0, 1.0, -0.999), n: Direction::Z, wo: Direction::Z, material: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(path_trace_indirect(&sp, &scene, 64, true, &mut rng), Rgb::ZERO);
    }

    #[test]
    fn config_validation() {
        assert!(GatherConfig::default().validate().is_ok());
        assert!(GatherConfig { bands_gather: 0, ..Default::default() }.validate().is_err());
        assert!(GatherConfig { vsl_samples: 0, ..Default::default() }.validate().is_err());
        assert!(GatherConfig { vpl_clamp: Some(-1.0), ..Default::default() }.validate().is_err());
    }
}
