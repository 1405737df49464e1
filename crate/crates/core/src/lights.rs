//! Reflective shadow maps, virtual-light placement and radius heuristics.
//!
//! The RSM maps its square pixel grid onto the spot cone with an
//! equal-area (concentric) square-to-disk map followed by an equal-area
//! disk-to-cap map, so every pixel subtends the same solid angle and carries
//! the same share of the light's power.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::math::{Direction, Rgb, Vec3};
use crate::scene::{Ray, Scene, SpotLight};

#[derive(Debug, Error)]
pub enum LightsError {
    #[error("requested {requested} virtual lights but the RSM has only {valid} valid pixels")]
    TooManyLights { requested: usize, valid: usize },
    #[error("a {grid}x{grid} placement grid does not fit a {resolution}x{resolution} RSM")]
    GridTooLarge { grid: usize, resolution: usize },
    #[error("light count must be at least 1")]
    NoLights,
    #[error("no pixel group contains a lit surface")]
    NothingLit,
    #[error("HVL dump: {0}")]
    Io(#[from] std::io::Error),
}

/// One lit surface sample seen from the light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsmTexel {
    pub position: Vec3,
    pub normal: Direction,
    /// Distance to the light.
    pub depth: f64,
    pub material: usize,
}

#[derive(Debug, Clone)]
pub struct RsmBuffer {
    resolution: usize,
    texels: Vec<Option<RsmTexel>>,
    light_position: Vec3,
}

/// Equal-area map from `[-1, 1]²` to the unit disk (concentric mapping).
pub fn concentric_disk(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, FRAC_PI_4 * (b / a))
    } else {
        (b, 2.0 * FRAC_PI_4 - FRAC_PI_4 * (a / b))
    };
    (r * phi.cos(), r * phi.sin())
}

/// Equal-area map from the unit disk to the cap `{ω : ω_z ≥ 1 − k}` of the
/// local frame, `k = 1 − cos a`.
#[inline]
pub fn disk_to_cone(u: f64, v: f64, k: f64) -> Vec3 {
    let s = (u * u + v * v) * k;
    let t = (k * (2.0 - s)).max(0.0).sqrt();
    Vec3::new(u * t, v * t, 1.0 - s)
}

/// Direction of RSM pixel `(i, j)` for `light`.
pub fn rsm_direction(light: &SpotLight, i: usize, j: usize) -> Direction {
    let res = light.rsm_resolution as f64;
    let a = 2.0 * (i as f64 + 0.5) / res - 1.0;
    let b = 1.0 - 2.0 * (j as f64 + 0.5) / res;
    let (u, v) = concentric_disk(a, b);
    let k = 2.0 * (0.5 * light.half_angle).sin().powi(2);
    Direction::new(light.frame.to_world(disk_to_cone(u, v, k))).expect("unit direction")
}

/// Casts one ray per RSM pixel. Pixels that miss, or whose surface faces
/// away from the light, are invalid.
pub fn render_rsm(scene: &Scene, light: &SpotLight) -> RsmBuffer {
    let res = light.rsm_resolution;
    let texels: Vec<Option<RsmTexel>> = (0..res * res)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % res, k / res);
            let ray = Ray::new(light.position, rsm_direction(light, i, j));
            let hit = scene.intersect(&ray)?;
            if hit.normal.dot(-ray.dir) <= 0.0 {
                return None;
            }
            Some(RsmTexel { position: hit.point, normal: hit.normal, depth: hit.t, material: hit.material })
        })
        .collect();
    RsmBuffer { resolution: res, texels, light_position: light.position }
}

impl RsmBuffer {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&RsmTexel> {
        self.texels[j * self.resolution + i].as_ref()
    }

    pub fn texels(&self) -> &[Option<RsmTexel>] {
        &self.texels
    }

    pub fn valid_count(&self) -> usize {
        self.texels.iter().filter(|t| t.is_some()).count()
    }

    pub fn light_position(&self) -> Vec3 {
        self.light_position
    }
}

/// A spherical-harmonics virtual light (also used as a VPL or VSL record).
#[derive(Debug, Clone, PartialEq)]
pub struct Hvl {
    pub position: Vec3,
    pub normal: Direction,
    pub flux: Rgb,
    pub radius: f64,
    pub material: usize,
    /// From the HVL toward the primary light.
    pub to_light: Direction,
    pub depth: f64,
    /// RSM pixel the light was placed at.
    pub pixel: (usize, usize),
}

/// Virtual lights placed on a `grid × grid` layout of RSM pixel groups.
#[derive(Debug, Clone)]
pub struct Distribution {
    pub hvls: Vec<Hvl>,
    pub grid: usize,
    /// HVL index for each grid cell, row-major; `None` for empty groups.
    pub cells: Vec<Option<usize>>,
}

/// Places one light at the centre of each pixel group (or the valid pixel
/// nearest to it) and splits `power` evenly. Radii are left at zero.
pub fn distribute(rsm: &RsmBuffer, count: usize, power: Rgb) -> Result<Distribution, LightsError> {
    if count == 0 {
        return Err(LightsError::NoLights);
    }
    let valid = rsm.valid_count();
    if count > valid {
        return Err(LightsError::TooManyLights { requested: count, valid });
    }
    let res = rsm.resolution;
    let grid = (count as f64).sqrt().floor() as usize;
    if grid > res {
        return Err(LightsError::GridTooLarge { grid, resolution: res });
    }
    // Group edges ⌊i·res/grid⌋ tile the whole RSM; sizes differ by at most
    // one pixel when `grid` does not divide `res`.
    let edge = |i: usize| i * res / grid;
    let mut picks = Vec::with_capacity(grid * grid);
    for gj in 0..grid {
        for gi in 0..grid {
            let (x0, x1, y0, y1) = (edge(gi), edge(gi + 1), edge(gj), edge(gj + 1));
            let (cx, cy) = ((x0 + x1) / 2, (y0 + y1) / 2);
            let mut best: Option<(usize, usize, usize)> = None;
            if rsm.get(cx, cy).is_some() {
                best = Some((0, cx, cy));
            } else {
                for y in y0..y1 {
                    for x in x0..x1 {
                        if rsm.get(x, y).is_none() {
                            continue;
                        }
                        let d2 = x.abs_diff(cx).pow(2) + y.abs_diff(cy).pow(2);
                        if best.is_none_or(|b| d2 < b.0) {
                            best = Some((d2, x, y));
                        }
                    }
                }
            }
            picks.push(best.map(|(_, x, y)| (x, y)));
        }
    }
    let actual = picks.iter().filter(|p| p.is_some()).count();
    if actual == 0 {
        return Err(LightsError::NothingLit);
    }
    let flux = power / actual as f64;
    let mut hvls = Vec::with_capacity(actual);
    let mut cells = Vec::with_capacity(picks.len());
    for p in picks {
        cells.push(p.map(|(x, y)| {
            let t = rsm.get(x, y).expect("picked pixels are valid");
            let to_light = Direction::new(rsm.light_position - t.position).unwrap_or(t.normal);
            hvls.push(Hvl {
                position: t.position,
                normal: t.normal,
                flux,
                radius: 0.0,
                material: t.material,
                to_light,
                depth: t.depth,
                pixel: (x, y),
            });
            hvls.len() - 1
        }));
    }
    Ok(Distribution { hvls, grid, cells })
}

/// Taylor form of `d tan(γ) k` with `γ = √2 λ / √M`.
pub fn radius_r2(lambda: f64, count: usize, depth: f64, k: f64) -> f64 {
    let g = std::f64::consts::SQRT_2 * lambda / (count as f64).sqrt();
    depth * (g + g * g * g / 3.0) * k
}

/// Whether `λ/√M ≤ 0.2`, the rule of thumb under which the Taylor form of
/// `tan` stays accurate (16 lights at 45°, 64 at 90°).
pub fn r2_within_taylor_bound(lambda: f64, count: usize) -> bool {
    lambda / (count as f64).sqrt() <= 0.2 + 1e-12
}

/// Depth-weighted mean distance to the 8-connected grid neighbours, times
/// `k`; `None` when no neighbour exists.
pub fn radius_r1(dist: &Distribution, hvl: usize, k: f64, epsilon: f64) -> Option<f64> {
    let cell = dist.cells.iter().position(|c| *c == Some(hvl))?;
    let g = dist.grid as i64;
    let (ci, cj) = ((cell as i64) % g, (cell as i64) / g);
    let me = &dist.hvls[hvl];
    let (mut num, mut den) = (0.0, 0.0);
    for dj in -1..=1 {
        for di in -1..=1 {
            let (i, j) = (ci + di, cj + dj);
            if (di == 0 && dj == 0) || i < 0 || j < 0 || i >= g || j >= g {
                continue;
            }
            if let Some(n) = dist.cells[(j * g + i) as usize] {
                let other = &dist.hvls[n];
                let w = 1.0 / ((me.depth - other.depth).abs() + epsilon);
                num += w * (me.position - other.position).length();
                den += w;
            }
        }
    }
    (den > 0.0).then(|| num / den * k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusMode {
    R1,
    R2,
    Fixed(f64),
}

/// Assigns every radius. `r1` falls back to `r2` for isolated lights.
pub fn assign_radii(dist: &mut Distribution, mode: RadiusMode, k: f64, half_angle: f64, epsilon: f64) {
    let m = dist.hvls.len();
    let radii: Vec<f64> = (0..m)
        .map(|j| {
            let r2 = || radius_r2(half_angle, m, dist.hvls[j].depth, k);
            match mode {
                RadiusMode::Fixed(r) => r,
                RadiusMode::R2 => r2(),
                RadiusMode::R1 => radius_r1(dist, j, k, epsilon).unwrap_or_else(r2),
            }
        })
        .collect();
    for (h, r) in dist.hvls.iter_mut().zip(radii) {
        h.radius = r.max(1e-9);
    }
}

/// CSV: index, position xyz, normal xyz, radius, flux rgb.
pub fn write_hvl_csv(hvls: &[Hvl], w: &mut impl Write) -> Result<(), LightsError> {
    writeln!(w, "index,px,py,pz,nx,ny,nz,radius,flux_r,flux_g,flux_b")?;
    for (i, h) in hvls.iter().enumerate() {
        let (p, n, f) = (h.position, h.normal, h.flux);
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            n.x(),
            n.y(),
            n.z(),
            h.radius,
            f.x,
            f.y,
            f.z
        )?;
    }
    Ok(())
}
