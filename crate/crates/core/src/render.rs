//! Frame rendering: RSM, virtual-light placement, then direct and indirect
//! passes over image rows in parallel.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::image::Image;
use crate::lights::{assign_radii, distribute, r2_within_taylor_bound, render_rsm, Hvl, LightsError, RadiusMode};
use crate::math::Rgb;
use crate::scene::{Ray, Scene};
use crate::shading::{
    direct_lighting, gather_indirect, gather_indirect_zh_fast, gather_vpl, gather_vsl, path_trace_indirect,
    GatherConfig, Mode, ShadePoint, ShadingError, ShadingTables,
};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("light {light}: {source}")]
    Lights { light: usize, source: LightsError },
    #[error(transparent)]
    Shading(#[from] ShadingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub config: GatherConfig,
    /// Virtual lights per spot light.
    pub hvl_count: usize,
    pub radius: RadiusMode,
    pub k: f64,
    pub seed: u64,
    pub indirect_only: bool,
    /// Direct lighting casts shadow rays.
    pub shadows: bool,
    pub brdf_cache: Option<PathBuf>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            config: GatherConfig::default(),
            hvl_count: 400,
            radius: RadiusMode::R2,
            k: 1.0,
            seed: 0,
            indirect_only: false,
            shadows: true,
            brdf_cache: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub rsm: Duration,
    pub distribute: Duration,
    pub tables: Duration,
    pub direct: Duration,
    pub indirect: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Direct plus indirect, or indirect alone with `indirect_only`.
    pub image: Image,
    pub direct: Image,
    pub indirect: Image,
    pub hvls: Vec<Hvl>,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

fn uses_virtual_lights(mode: Mode) -> bool {
    matches!(mode, Mode::Hvl | Mode::HvlZhFast | Mode::Vpl | Mode::Vsl)
}

/// Virtual lights for every spot light, radii assigned, in light order.
pub fn place_lights(
    scene: &Scene,
    count: usize,
    radius: RadiusMode,
    k: f64,
    timings: &mut StageTimings,
    warnings: &mut Vec<String>,
) -> Result<Vec<Hvl>, RenderError> {
    let mut all = Vec::new();
    let epsilon = 1e-3 * scene.diagonal();
    for (i, light) in scene.lights().iter().enumerate() {
        let t = Instant::now();
        let rsm = render_rsm(scene, light);
        timings.rsm += t.elapsed();
        let t = Instant::now();
        let mut dist = distribute(&rsm, count, light.power).map_err(|source| RenderError::Lights { light: i, source })?;
        if matches!(radius, RadiusMode::R2) && !r2_within_taylor_bound(light.half_angle, dist.hvls.len()) {
            warnings.push(format!(
                "light {i}: {} virtual lights are too few for the r2 approximation at a {:.1}° half-angle",
                dist.hvls.len(),
                light.half_angle.to_degrees()
            ));
        }
        assign_radii(&mut dist, radius, k, light.half_angle, epsilon);
        all.extend(dist.hvls);
        timings.distribute += t.elapsed();
    }
    Ok(all)
}

/// Camera shade points, row-major; `None` for misses and back faces.
pub fn primary_hits(scene: &Scene) -> Vec<Option<ShadePoint>> {
    let cam = scene.camera();
    (0..cam.width * cam.height)
        .into_par_iter()
        .map(|k| {
            let dir = cam.primary_ray(k % cam.width, k / cam.width);
            let hit = scene.intersect(&Ray::new(cam.position, dir))?;
            ShadePoint::from_hit(&hit, dir)
        })
        .collect()
}

/// Per-pixel generator: one stream of the seed per pixel index, so results
/// do not depend on scheduling.
pub fn pixel_rng(seed: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pixel as u64);
    rng
}

fn shade_rows(width: usize, height: usize, f: impl Fn(usize) -> Result<Rgb, RenderError> + Sync) -> Result<Image, RenderError> {
    let rows = (0..height)
        .into_par_iter()
        .map(|y| (0..width).map(|x| f(y * width + x)).collect::<Result<Vec<Rgb>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Image::from_rows(width, rows))
}

/// Indirect radiance at every shade point with the configured estimator.
pub fn indirect_pass(
    scene: &Scene,
    points: &[Option<ShadePoint>],
    hvls: &[Hvl],
    tables: &ShadingTables,
    cfg: &GatherConfig,
    seed: u64,
) -> Result<Image, RenderError> {
    let cam = scene.camera();
    let materials = scene.materials();
    shade_rows(cam.width, cam.height, |k| {
        let Some(sp) = &points[k] else { return Ok(Rgb::ZERO) };
        Ok(match cfg.mode {
            Mode::Hvl => gather_indirect(sp, hvls, tables),
            Mode::HvlZhFast => gather_indirect_zh_fast(sp, hvls, tables)?,
            Mode::Vpl => gather_vpl(sp, hvls, materials, cfg.vpl_clamp),
            Mode::Vsl => gather_vsl(sp, hvls, materials, cfg.vsl_samples, &mut pixel_rng(seed, k)),
            Mode::Path => path_trace_indirect(sp, scene, cfg.path_samples, cfg.path_visibility, &mut pixel_rng(seed, k)),
            Mode::Direct => Rgb::ZERO,
        })
    })
}

/// Direct radiance from every spot light.
pub fn direct_pass(scene: &Scene, points: &[Option<ShadePoint>], tables: &ShadingTables, shadows: bool) -> Image {
    let cam = scene.camera();
    let occluders = shadows.then_some(scene);
    shade_rows(cam.width, cam.height, |k| {
        let Some(sp) = &points[k] else { return Ok(Rgb::ZERO) };
        Ok(scene.lights().iter().fold(Rgb::ZERO, |acc, l| acc + direct_lighting(sp, l, tables, occluders)))
    })
    .expect("direct lighting cannot fail")
}

/// Renders one frame on the current rayon pool.
pub fn render(scene: &Scene, opts: &RenderOptions) -> Result<RenderOutput, RenderError> {
    let start = Instant::now();
    let cfg = &opts.config;
    cfg.validate()?;
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let hvls = if uses_virtual_lights(cfg.mode) {
        place_lights(scene, opts.hvl_count, opts.radius, opts.k, &mut timings, &mut warnings)?
    } else {
        Vec::new()
    };

    let t = Instant::now();
    let tables = ShadingTables::build(scene.materials(), cfg.bands_emission, cfg.bands_gather, opts.brdf_cache.as_deref())?;
    timings.tables = t.elapsed();

    let t = Instant::now();
    let points = primary_hits(scene);
    let direct = if opts.indirect_only {
        Image::new(scene.camera().width, scene.camera().height)
    } else {
        direct_pass(scene, &points, &tables, opts.shadows)
    };
    timings.direct = t.elapsed();

    let indirect = if cfg.mode == Mode::Direct {
        Image::new(scene.camera().width, scene.camera().height)
    } else {
        let t = Instant::now();
        let image = indirect_pass(scene, &points, &hvls, &tables, cfg, opts.seed)?;
        timings.indirect = t.elapsed();
        image
    };

    let image = if opts.indirect_only { indirect.clone() } else { direct.add(&indirect).expect("same size") };
    timings.total = start.elapsed();
    Ok(RenderOutput { image, direct, indirect, hvls, timings, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures;

    fn small(scene: &Scene, w: usize) -> Scene {
        let c = scene.camera();
        let mut cam = c.clone();
        cam.width = w;
        cam.height = w;
        scene.with_camera(cam)
    }

    #[test]
    fn pixel_streams_differ() {
        use rand::RngCore;
        let a = pixel_rng(7, 0).next_u64();
        let b = pixel_rng(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, pixel_rng(7, 0).next_u64());
    }

    #[test]
    fn direct_mode_has_no_indirect() {
        let scene = small(&fixtures::cornell(), 8);
        let out = render(&scene, &RenderOptions { config: GatherConfig { mode: Mode::Direct, ..Default::default() }, ..Default::default() }).unwrap();
        assert!(out.indirect.pixels().iter().all(|p| *p == [0.0; 3]));
        assert!(out.image.pixels().iter().any(|p| p[0] > 0.0));
        assert!(out.hvls.is_empty());
        assert_eq!(out.timings.indirect, Duration::ZERO);
    }

    #[test]
    fn r2_warning_for_few_lights() {
        let scene = small(&fixtures::plane(), 4);
        let opts = RenderOptions { hvl_count: 4, ..Default::default() };
        let out = render(&scene, &opts).unwrap();
        assert_eq!(out.warnings.len(), 1);
        let out = render(&scene, &RenderOptions { hvl_count: 16, ..opts }).unwrap();
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn indirect_only_image() {
        let scene = small(&fixtures::cornell(), 8);
        let opts = RenderOptions { indirect_only: true, hvl_count: 16, ..Default::default() };
        let out = render(&scene, &opts).unwrap();
        assert_eq!(out.image.pixels(), out.indirect.pixels());
        assert!(out.direct.pixels().iter().all(|p| *p == [0.0; 3]));
    }
}
