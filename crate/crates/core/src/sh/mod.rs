//! Spherical and zonal harmonics.
//!
//! Coefficients are stored flat with `i = l(l+1) + m`. Band counts are
//! called `bands` everywhere: a vector with `bands = N` holds `l ∈ [0, N)`.

mod basis;
mod legendre;
pub mod quadrature;
mod window;
mod zonal;

use thiserror::Error;

pub use basis::{eval_basis, eval_basis_into, normalization, reconstruct, sh_basis, sh_dot, MAX_BANDS};
pub use legendre::{assoc_legendre, cap_integral, legendre};
pub use quadrature::{project_quadrature, project_quadrature_with, SphereRule};
pub use window::{hann_weight, window_coeffs};
pub use zonal::{
    illuminance, project_zonal, zh_cap, zh_convolve, zh_reconstruct, zh_rotate_to_sh, ILLUMINANCE_C2,
    ILLUMINANCE_C3, ILLUMINANCE_C4, ILLUMINANCE_C5,
};

pub(crate) use legendre::legendre_all;
pub(crate) use zonal::{zh_cap_into, zh_rotate_into};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShError {
    #[error("argument {0} outside [-1, 1]")]
    Domain(f64),
    #[error("degree m={m} invalid for band l={l}")]
    Degree { l: usize, m: i64 },
    #[error("coefficient count {len} does not match {bands} bands")]
    Length { bands: usize, len: usize },
    #[error("band count {0} outside the supported range")]
    TooManyBands(usize),
    #[error("operation needs at least {needed} bands, got {got}")]
    TooFewBands { needed: usize, got: usize },
    #[error("band counts differ: {0} vs {1}")]
    BandMismatch(usize, usize),
    #[error("cap half-angle {0} outside [0, π]")]
    HalfAngle(f64),
    #[error("non-finite coefficient")]
    NonFinite,
}

/// Flat index of `(l, m)`.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * (l + 1)) as i64 + m) as usize
}

/// Band-limited SH coefficient vector with `bands²` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ShVector {
    bands: usize,
    coeffs: Vec<f64>,
}

impl ShVector {
    pub fn zeros(bands: usize) -> Self {
        ShVector { bands, coeffs: vec![0.0; bands * bands] }
    }

    pub fn from_coeffs(bands: usize, coeffs: Vec<f64>) -> Result<Self, ShError> {
        if coeffs.len() != bands * bands {
            return Err(ShError::Length { bands, len: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ShError::NonFinite);
        }
        Ok(ShVector { bands, coeffs })
    }

    /// Unit vector at `(l, m)`.
    pub fn unit(bands: usize, l: usize, m: i64) -> Self {
        let mut v = Self::zeros(bands);
        v.coeffs[sh_index(l, m)] = 1.0;
        v
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.coeffs[sh_index(l, m)] = v;
    }

    pub fn scaled(&self, s: f64) -> ShVector {
        ShVector { bands: self.bands, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn truncated(&self, bands: usize) -> ShVector {
        let bands = bands.min(self.bands);
        ShVector { bands, coeffs: self.coeffs[..bands * bands].to_vec() }
    }

    pub fn dot(&self, other: &ShVector) -> f64 {
        sh_dot(self, other)
    }

    pub fn max_abs_diff(&self, other: &ShVector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Zonal (m = 0) coefficients of a function symmetric about +z.
#[derive(Debug, Clone, PartialEq)]
pub struct ZhVector {
    coeffs: Vec<f64>,
}

impl ZhVector {
    pub fn zeros(bands: usize) -> Self {
        ZhVector { coeffs: vec![0.0; bands] }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self, ShError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ShError::NonFinite);
        }
        Ok(ZhVector { coeffs })
    }

    pub fn bands(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize) -> f64 {
        self.coeffs[l]
    }

    pub fn scaled(&self, s: f64) -> ZhVector {
        ZhVector { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// The same function as a full SH vector about +z.
    pub fn to_sh(&self) -> ShVector {
        let mut v = ShVector::zeros(self.bands());
        for (l, c) in self.coeffs.iter().enumerate() {
            v.set(l, 0, *c);
        }
        v
    }
}
