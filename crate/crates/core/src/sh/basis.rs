//! Real spherical harmonics basis.
//!
//! Convention: `Y_l^0 = K_l^0 P_l(cos θ)`, `Y_l^m = √2 K_l^m P_l^m(cos θ) cos(mφ)`
//! for `m > 0` and `√2 K_l^{|m|} P_l^{|m|}(cos θ) sin(|m|φ)` for `m < 0`, with
//! `P_l^m` free of the Condon–Shortley phase (so `Y_1^1 ∝ +x`).

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{sh_index, ShError, ShVector};
use crate::math::Direction;

/// Largest band count the cached normalization table covers.
pub const MAX_BANDS: usize = 48;

/// `√((2l+1)/4π · (l−m)!/(l+m)!)` for `0 ≤ m ≤ l`.
pub fn normalization(l: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

struct Tables {
    /// `K_l^m` (times √2 for m > 0) at flat index `l(l+1)/2 + m`.
    k: Vec<f64>,
    /// `(2m−1)!!`
    double_factorial: Vec<f64>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut k = Vec::with_capacity(MAX_BANDS * (MAX_BANDS + 1) / 2);
        for l in 0..MAX_BANDS {
            for m in 0..=l {
                let s = if m == 0 { 1.0 } else { 2f64.sqrt() };
                k.push(s * normalization(l, m));
            }
        }
        let mut double_factorial = vec![1.0; MAX_BANDS];
        for m in 1..MAX_BANDS {
            double_factorial[m] = double_factorial[m - 1] * (2 * m - 1) as f64;
        }
        Tables { k, double_factorial }
    })
}

/// Writes all `bands²` basis values for `dir` into `out` (flat SH order).
///
/// Panics if `out` is shorter than `bands²` or `bands > MAX_BANDS`.
pub fn eval_basis_into(bands: usize, dir: Direction, out: &mut [f64]) {
    assert!(bands <= MAX_BANDS, "band count {bands} exceeds {MAX_BANDS}");
    let n2 = bands * bands;
    assert!(out.len() >= n2);
    if bands == 0 {
        return;
    }
    let t = tables();
    let (x, y, z) = (dir.x(), dir.y(), dir.z());

    // (x + iy)^m carries the sin^m θ factor of P_l^m together with cos/sin(mφ)
    let (mut cr, mut ci) = (1.0, 0.0);
    for m in 0..bands {
        if m > 0 {
            let nr = cr * x - ci * y;
            ci = cr * y + ci * x;
            cr = nr;
        }
        let mut q0 = t.double_factorial[m];
        let mut q1 = 0.0;
        for l in m..bands {
            let q = if l == m {
                q0
            } else if l == m + 1 {
                q1 = z * (2 * m + 1) as f64 * q0;
                q1
            } else {
                let q2 = ((2 * l - 1) as f64 * z * q1 - (l + m - 1) as f64 * q0) / (l - m) as f64;
                q0 = q1;
                q1 = q2;
                q2
            };
            let k = t.k[l * (l + 1) / 2 + m] * q;
            if m == 0 {
                out[sh_index(l, 0)] = k;
            } else {
                out[sh_index(l, m as i64)] = k * cr;
                out[sh_index(l, -(m as i64))] = k * ci;
            }
        }
    }
}

/// All basis values for `dir` as an [`ShVector`].
pub fn eval_basis(bands: usize, dir: Direction) -> ShVector {
    let mut v = ShVector::zeros(bands);
    eval_basis_into(bands, dir, v.coeffs_mut());
    v
}

/// Single basis function `Y_l^m(dir)`.
pub fn sh_basis(l: usize, m: i64, dir: Direction) -> Result<f64, ShError> {
    if m.unsigned_abs() as usize > l {
        return Err(ShError::Degree { l, m });
    }
    let bands = l + 1;
    if bands > MAX_BANDS {
        return Err(ShError::TooManyBands(bands));
    }
    let mut buf = vec![0.0; bands * bands];
    eval_basis_into(bands, dir, &mut buf);
    Ok(buf[sh_index(l, m)])
}

/// Band-limited reconstruction `Σ v_l^m Y_l^m(dir)`.
pub fn reconstruct(v: &ShVector, dir: Direction) -> f64 {
    let bands = v.bands();
    if bands <= 8 {
        let mut buf = [0.0; 64];
        eval_basis_into(bands, dir, &mut buf);
        v.coeffs().iter().zip(&buf).map(|(a, b)| a * b).sum()
    } else {
        let mut buf = vec![0.0; bands * bands];
        eval_basis_into(bands, dir, &mut buf);
        v.coeffs().iter().zip(&buf).map(|(a, b)| a * b).sum()
    }
}

/// `∫ a b dω` of the two band-limited functions; truncates to the smaller
/// band count.
pub fn sh_dot(a: &ShVector, b: &ShVector) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum()
}
