//! Legendre polynomials and the closed-form cap integral built on them.

use super::ShError;

const DOMAIN_SLACK: f64 = 1e-12;

fn check_domain(x: f64) -> Result<f64, ShError> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_SLACK {
        return Err(ShError::Domain(x));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// `P_l(x)` by the Bonnet recurrence.
pub fn legendre(l: usize, x: f64) -> Result<f64, ShError> {
    let x = check_domain(x)?;
    Ok(legendre_unchecked(l, x))
}

pub(crate) fn legendre_unchecked(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Fills `out[l] = P_l(x)` for every `l < out.len()`.
pub(crate) fn legendre_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Associated Legendre function `P_l^m(x)` for `0 ≤ m ≤ l`.
///
/// No Condon–Shortley phase: `P_m^m(x) = (2m−1)!! (1−x²)^{m/2}` is
/// non-negative on `[-1, 1]`. The real SH basis in this crate is built on
/// this convention.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64, ShError> {
    if m > l {
        return Err(ShError::Degree { l, m: m as i64 });
    }
    let x = check_domain(x)?;
    let s = (1.0 - x * x).max(0.0).sqrt();
    Ok(s.powi(m as i32) * assoc_legendre_poly(l, m, x))
}

/// Polynomial part `Q_l^m(x) = P_l^m(x) / (1−x²)^{m/2}`.
pub(crate) fn assoc_legendre_poly(l: usize, m: usize, x: f64) -> f64 {
    let mut qmm = 1.0;
    for k in 1..=m {
        qmm *= (2 * k - 1) as f64;
    }
    if l == m {
        return qmm;
    }
    let mut q0 = qmm;
    let mut q1 = x * (2 * m + 1) as f64 * qmm;
    for k in (m + 2)..=l {
        let q2 = ((2 * k - 1) as f64 * x * q1 - (k + m - 1) as f64 * q0) / (k - m) as f64;
        q0 = q1;
        q1 = q2;
    }
    q1
}

/// `∫_0^a P_l(cos θ) sin θ dθ` with `alpha = cos a`.
///
/// Equals `(P_{l−1}(α) − P_{l+1}(α)) / (2l+1)`, taking `P_{−1} ≡ 1` so that
/// band 0 reduces to `1 − α`.
pub fn cap_integral(l: usize, alpha: f64) -> Result<f64, ShError> {
    let alpha = check_domain(alpha)?;
    let below = if l == 0 { 1.0 } else { legendre_unchecked(l - 1, alpha) };
    let above = legendre_unchecked(l + 1, alpha);
    Ok((below - above) / (2 * l + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(legendre(0, 0.3).unwrap(), 1.0);
        assert_eq!(legendre(1, -0.7).unwrap(), -0.7);
        assert!((legendre(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(legendre(3, 1.0 + 1e-9).is_err());
        assert!(legendre(3, 1.0 + 1e-13).is_ok());
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(cap_integral(2, -1.5).is_err());
    }

    #[test]
    fn associated_values() {
        // P_1^1(0) = 1 without the Condon–Shortley phase
        assert!((assoc_legendre(1, 1, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for m in 1..5 {
            assert_eq!(assoc_legendre(m, m, 1.0).unwrap(), 0.0);
            assert_eq!(assoc_legendre(m, m, -1.0).unwrap(), 0.0);
        }
        assert!((assoc_legendre(2, 0, 0.5).unwrap() + 0.125).abs() < 1e-15);
        // P_2^1(x) = 3x sqrt(1-x²), P_2^2(x) = 3(1-x²)
        let x: f64 = 0.3;
        let s = (1.0 - x * x).sqrt();
        assert!((assoc_legendre(2, 1, x).unwrap() - 3.0 * x * s).abs() < 1e-14);
        assert!((assoc_legendre(2, 2, x).unwrap() - 3.0 * (1.0 - x * x)).abs() < 1e-14);
        // P_3^1(x) = 1.5 (5x²-1) sqrt(1-x²)
        let p31 = 1.5 * (5.0 * x * x - 1.0) * s;
        assert!((assoc_legendre(3, 1, x).unwrap() - p31).abs() < 1e-14);
    }

    #[test]
    fn legendre_all_matches_single() {
        let mut buf = [0.0; 12];
        legendre_all(-0.37, &mut buf);
        for (l, v) in buf.iter().enumerate() {
            assert!((v - legendre(l, -0.37).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn cap_integral_examples() {
        assert_eq!(cap_integral(0, 0.0).unwrap(), 1.0);
        assert!((cap_integral(1, 0.0).unwrap() - 0.5).abs() < 1e-15);
        for l in 1..20 {
            assert!(cap_integral(l, 1.0).unwrap().abs() < 1e-15);
        }
    }
}
