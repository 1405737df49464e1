//! Parametric BRDFs and their tabulated SH projections.

mod table;

use std::f64::consts::PI;

use thiserror::Error;

use crate::math::{Direction, Rgb, Vec3};

pub use table::{BrdfTable, RgbSh, DEFAULT_THETA_STEPS};

#[derive(Debug, Error)]
pub enum BrdfError {
    #[error("invalid material: {0}")]
    Invalid(String),
    #[error("table cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("table cache format: {0}")]
    Format(String),
}

/// A parametric, isotropic BRDF.
#[derive(Debug, Clone, PartialEq)]
pub enum BrdfModel {
    Lambertian {
        albedo: Rgb,
    },
    /// GGX distribution, height-correlated Smith masking, exact dielectric
    /// Fresnel. `roughness` is the GGX `α` directly.
    Ggx {
        albedo: Rgb,
        roughness: f64,
        eta: f64,
    },
    /// Lambertian base plus a normalized Phong lobe about the mirror
    /// direction. The lobe is circular-symmetric, so it has an exact ZH form.
    Phong {
        diffuse: Rgb,
        specular: Rgb,
        exponent: f64,
    },
}

pub const DEFAULT_ETA: f64 = 1.5;

fn check_albedo(name: &str, c: Rgb) -> Result<(), BrdfError> {
    for v in c.to_array() {
        if !(0.0..=1.0).contains(&v) {
            return Err(BrdfError::Invalid(format!("{name} channel {v} outside [0, 1]")));
        }
    }
    Ok(())
}

impl BrdfModel {
    pub fn lambertian(albedo: Rgb) -> Self {
        BrdfModel::Lambertian { albedo }
    }

    pub fn ggx(albedo: Rgb, roughness: f64) -> Self {
        BrdfModel::Ggx { albedo, roughness, eta: DEFAULT_ETA }
    }

    pub fn validate(&self) -> Result<(), BrdfError> {
        match *self {
            BrdfModel::Lambertian { albedo } => check_albedo("albedo", albedo),
            BrdfModel::Ggx { albedo, roughness, eta } => {
                check_albedo("albedo", albedo)?;
                if !(roughness > 0.0 && roughness <= 1.0) {
                    return Err(BrdfError::Invalid(format!("roughness {roughness} outside (0, 1]")));
                }
                if !(eta > 1.0 && eta.is_finite()) {
                    return Err(BrdfError::Invalid(format!("eta {eta} must exceed 1")));
                }
                Ok(())
            }
            BrdfModel::Phong { diffuse, specular, exponent } => {
                check_albedo("albedo", diffuse)?;
                check_albedo("specular", specular)?;
                if (diffuse + specular).max_element() > 1.0 {
                    return Err(BrdfError::Invalid("albedo + specular exceeds 1".into()));
                }
                if !(exponent >= 0.0 && exponent.is_finite()) {
                    return Err(BrdfError::Invalid(format!("exponent {exponent} must be >= 0")));
                }
                Ok(())
            }
        }
    }

    /// Whether the lobe about any outgoing direction is circular-symmetric
    /// (diffuse, or diffuse plus a mirror-centred Phong lobe).
    pub fn is_zh_compatible(&self) -> bool {
        !matches!(self, BrdfModel::Ggx { .. })
    }

    /// Diffuse reflectance, zero for GGX.
    pub fn diffuse_albedo(&self) -> Rgb {
        match *self {
            BrdfModel::Lambertian { albedo } => albedo,
            BrdfModel::Phong { diffuse, .. } => diffuse,
            BrdfModel::Ggx { .. } => Rgb::ZERO,
        }
    }

    /// `f_s(wi, wo)` about normal `n`; zero when either direction is below
    /// the surface.
    pub fn eval(&self, wi: Direction, wo: Direction, n: Direction) -> Rgb {
        let cos_i = wi.dot(n);
        let cos_o = wo.dot(n);
        if cos_i <= 0.0 || cos_o <= 0.0 {
            return Rgb::ZERO;
        }
        match *self {
            BrdfModel::Lambertian { albedo } => albedo / PI,
            BrdfModel::Ggx { albedo, roughness, eta } => {
                albedo * ggx_specular(wi.vec(), wo.vec(), n.vec(), cos_i, cos_o, roughness, eta)
            }
            BrdfModel::Phong { diffuse, specular, exponent } => {
                let lobe = phong_lobe(wi.dot(wo.reflect(n)), exponent);
                diffuse / PI + specular * lobe
            }
        }
    }
}

/// Normalized Phong lobe `(n+2)/(2π) max(0, c)^n` of the cosine to the
/// mirror direction.
pub fn phong_lobe(cos_to_mirror: f64, exponent: f64) -> f64 {
    if cos_to_mirror <= 0.0 {
        return 0.0;
    }
    (exponent + 2.0) / (2.0 * PI) * cos_to_mirror.powf(exponent)
}

/// Unpolarized Fresnel reflectance of a dielectric interface with relative
/// index `eta` at incidence cosine `c`.
pub fn fresnel_dielectric(c: f64, eta: f64) -> f64 {
    let c = c.abs();
    let g2 = eta * eta - 1.0 + c * c;
    if g2 < 0.0 {
        return 1.0;
    }
    let g = g2.sqrt();
    let a = (g - c) / (g + c);
    let b = (c * (g + c) - 1.0) / (c * (g - c) + 1.0);
    0.5 * a * a * (1.0 + b * b)
}

fn ggx_lambda(cos: f64, alpha: f64) -> f64 {
    let cos2 = cos * cos;
    let tan2 = (1.0 - cos2).max(0.0) / cos2;
    0.5 * (-1.0 + (1.0 + alpha * alpha * tan2).sqrt())
}

fn ggx_specular(wi: Vec3, wo: Vec3, n: Vec3, cos_i: f64, cos_o: f64, alpha: f64, eta: f64) -> f64 {
    let Some(h) = (wi + wo).try_normalize() else {
        return 0.0;
    };
    let cos_h = h.dot(n);
    if cos_h <= 0.0 {
        return 0.0;
    }
    let a2 = alpha * alpha;
    let t = cos_h * cos_h * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * t * t);
    let g = 1.0 / (1.0 + ggx_lambda(cos_i, alpha) + ggx_lambda(cos_o, alpha));
    let f = fresnel_dielectric(wi.dot(h), eta);
    f * d * g / (4.0 * cos_i * cos_o)
}
