//! Zonal harmonics: spherical caps, rotation onto arbitrary axes,
//! convolution and the three-band irradiance shortcut.

use std::f64::consts::PI;

use super::basis::{eval_basis_into, normalization, MAX_BANDS};
use super::quadrature::gauss_legendre;
use super::{legendre_all, sh_index, ShError, ShVector, ZhVector};
use crate::math::Direction;

/// Irradiance constants for the clamped-cosine convolution of bands 0..2.
pub const ILLUMINANCE_C2: f64 = 0.511664;
pub const ILLUMINANCE_C3: f64 = 0.743125;
pub const ILLUMINANCE_C4: f64 = 0.886227;
pub const ILLUMINANCE_C5: f64 = 0.247708;

/// ZH coefficients of the unit-luminance cap of half-angle `a` about +z.
///
/// `L̃_0 = √π (1 − α)` and `L̃_l = √(π/(2l+1)) (P_{l−1}(α) − P_{l+1}(α))`
/// with `α = cos a`.
pub fn zh_cap(a: f64, bands: usize) -> Result<ZhVector, ShError> {
    if !(0.0..=PI).contains(&a) {
        return Err(ShError::HalfAngle(a));
    }
    let mut out = ZhVector::zeros(bands);
    zh_cap_into(a.cos(), out.coeffs_mut());
    Ok(out)
}

/// Cap coefficients for `alpha = cos a` written into `out` (one per band).
pub(crate) fn zh_cap_into(alpha: f64, out: &mut [f64]) {
    let bands = out.len();
    if bands == 0 {
        return;
    }
    let mut p = [0.0; MAX_BANDS + 1];
    legendre_all(alpha, &mut p[..bands + 1]);
    out[0] = PI.sqrt() * (1.0 - alpha);
    for l in 1..bands {
        out[l] = (PI / (2 * l + 1) as f64).sqrt() * (p[l - 1] - p[l + 1]);
    }
}

/// Re-orients a circular-symmetric function from +z onto `axis`:
/// `L_l^m = √(4π/(2l+1)) Y_l^m(axis) L̃_l`.
pub fn zh_rotate_to_sh(zh: &ZhVector, axis: Direction) -> ShVector {
    let mut out = ShVector::zeros(zh.bands());
    zh_rotate_into(zh.coeffs(), axis, out.coeffs_mut());
    out
}

pub(crate) fn zh_rotate_into(zh: &[f64], axis: Direction, out: &mut [f64]) {
    let bands = zh.len();
    eval_basis_into(bands, axis, out);
    for (l, c) in zh.iter().enumerate() {
        let s = (4.0 * PI / (2 * l + 1) as f64).sqrt() * c;
        for m in -(l as i64)..=(l as i64) {
            out[sh_index(l, m)] *= s;
        }
    }
}

/// Spherical convolution of two circular-symmetric functions:
/// `h_l = √(4π/(2l+1)) f_l g_l`. Linear in the number of bands.
pub fn zh_convolve(f: &ZhVector, g: &ZhVector) -> Result<ZhVector, ShError> {
    if f.bands() != g.bands() {
        return Err(ShError::BandMismatch(f.bands(), g.bands()));
    }
    let coeffs = f
        .coeffs()
        .iter()
        .zip(g.coeffs())
        .enumerate()
        .map(|(l, (a, b))| (4.0 * PI / (2 * l + 1) as f64).sqrt() * a * b)
        .collect();
    Ok(ZhVector::from_coeffs(coeffs).expect("finite inputs give finite products"))
}

/// Evaluates a ZH function at polar angle `acos(cos_theta)` from its axis.
pub fn zh_reconstruct(zh: &ZhVector, cos_theta: f64) -> f64 {
    let bands = zh.bands();
    let mut p = vec![0.0; bands];
    legendre_all(cos_theta.clamp(-1.0, 1.0), &mut p);
    zh.coeffs()
        .iter()
        .enumerate()
        .map(|(l, c)| c * normalization(l, 0) * p[l])
        .sum()
}

/// ZH projection `2π ∫ f(t) K_l P_l(t) dt` of a profile given as a function
/// of `t = cos θ`, integrated by Gauss–Legendre on each of `pieces`
/// (sub-intervals of `[-1, 1]`) with `nodes` points apiece.
pub fn project_zonal(
    f: impl Fn(f64) -> f64,
    bands: usize,
    pieces: &[(f64, f64)],
    nodes: usize,
) -> ZhVector {
    let (x, w) = gauss_legendre(nodes);
    let mut out = vec![0.0; bands];
    let mut p = vec![0.0; bands];
    for &(lo, hi) in pieces {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (xi, wi) in x.iter().zip(&w) {
            let t = mid + half * xi;
            let v = f(t) * wi * half;
            legendre_all(t, &mut p);
            for l in 0..bands {
                out[l] += v * p[l];
            }
        }
    }
    for (l, o) in out.iter_mut().enumerate() {
        *o *= 2.0 * PI * normalization(l, 0);
    }
    ZhVector::from_coeffs(out).expect("finite profile")
}

/// Irradiance from a circular-symmetric luminance with ZH coefficients
/// `zh` (bands 0..2 used) at a surface whose normal makes `z = ω_l · n`
/// with the luminance axis: `E = c₃L₂z² + 2c₂L₁z + c₄L₀ − c₅L₂`.
pub fn illuminance(z: f64, zh: &ZhVector) -> Result<f64, ShError> {
    if zh.bands() < 3 {
        return Err(ShError::TooFewBands { needed: 3, got: zh.bands() });
    }
    let (l0, l1, l2) = (zh.get(0), zh.get(1), zh.get(2));
    Ok(ILLUMINANCE_C3 * l2 * z * z + 2.0 * ILLUMINANCE_C2 * l1 * z + ILLUMINANCE_C4 * l0
        - ILLUMINANCE_C5 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::reconstruct;

    #[test]
    fn cap_examples() {
        let full = zh_cap(PI, 4).unwrap();
        assert!((full.get(0) - 2.0 * PI.sqrt()).abs() < 1e-12);
        for l in 1..4 {
            assert!(full.get(l).abs() < 1e-12);
        }
        let half = zh_cap(PI / 2.0, 2).unwrap();
        assert!((half.get(0) - 1.7724538509055159).abs() < 1e-12);
        assert!((half.get(1) - (PI / 3.0).sqrt() * 1.5).abs() < 1e-12);
        assert!((half.get(1) - 1.53499).abs() < 1e-5);
        assert!(zh_cap(0.0, 6).unwrap().coeffs().iter().all(|c| c.abs() < 1e-15));
        assert!(zh_cap(-0.1, 3).is_err());
        assert!(zh_cap(3.2, 3).is_err());
    }

    #[test]
    fn band_zero_grows_with_half_angle() {
        let mut prev = -1.0;
        for i in 0..=100 {
            let a = PI * i as f64 / 100.0;
            let c0 = zh_cap(a, 1).unwrap().get(0);
            assert!(c0 > prev);
            prev = c0;
        }
    }

    #[test]
    fn rotation_to_z_is_identity() {
        let zh = zh_cap(0.7, 6).unwrap();
        let sh = zh_rotate_to_sh(&zh, Direction::Z);
        for l in 0..6 {
            for m in -(l as i64)..=(l as i64) {
                let expect = if m == 0 { zh.get(l) } else { 0.0 };
                assert!((sh.get(l, m) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotated_cap_peaks_on_its_axis() {
        let axis = Direction::from_xyz(0.4, -0.7, 0.3).unwrap();
        let sh = zh_rotate_to_sh(&zh_cap(0.5, 8).unwrap(), axis);
        let at_axis = reconstruct(&sh, axis);
        for i in 0..40 {
            for j in 0..80 {
                let d = Direction::from_spherical(PI * (i as f64 + 0.5) / 40.0, 2.0 * PI * j as f64 / 80.0);
                assert!(reconstruct(&sh, d) <= at_axis + 1e-12);
            }
        }
    }

    #[test]
    fn convolution_identities() {
        let f = zh_cap(0.9, 5).unwrap();
        // a band-0-only kernel with √(4π)·g_0 = 1 passes band 0 and kills the
        // rest; the Dirac kernel needs √(4π/(2l+1)) g_l = 1 in every band
        let band0 = ZhVector::from_coeffs(vec![1.0 / (4.0 * PI).sqrt(), 0.0, 0.0, 0.0, 0.0]).unwrap();
        let h = zh_convolve(&f, &band0).unwrap();
        assert!((h.get(0) - f.get(0)).abs() < 1e-12);
        assert!(h.coeffs()[1..].iter().all(|c| *c == 0.0));
        let mut delta = ZhVector::zeros(5);
        for l in 0..5 {
            delta.coeffs_mut()[l] = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        }
        let h = zh_convolve(&f, &delta).unwrap();
        for l in 0..5 {
            assert!((h.get(l) - f.get(l)).abs() < 1e-12);
        }
        let constant = zh_cap(PI, 5).unwrap();
        let h = zh_convolve(&constant, &f).unwrap();
        assert!(h.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
        assert!(zh_convolve(&f, &ZhVector::zeros(4)).is_err());
    }

    #[test]
    fn illuminance_of_uniform_sphere_is_pi() {
        let zh = zh_cap(PI, 3).unwrap();
        for z in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert!((illuminance(z, &zh).unwrap() - PI).abs() < 1e-4);
        }
        assert_eq!(illuminance(0.3, &ZhVector::zeros(3)).unwrap(), 0.0);
        assert!(illuminance(0.3, &ZhVector::zeros(2)).is_err());
    }

    #[test]
    fn zonal_reconstruction_matches_rotated_sh() {
        let zh = zh_cap(0.8, 7).unwrap();
        let axis = Direction::from_xyz(-0.2, 0.5, 0.8).unwrap();
        let sh = zh_rotate_to_sh(&zh, axis);
        let d = Direction::from_xyz(0.3, 0.3, 0.9).unwrap();
        assert!((zh_reconstruct(&zh, d.dot(axis)) - reconstruct(&sh, d)).abs() < 1e-12);
    }
}
