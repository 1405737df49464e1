//! Product quadrature on the sphere: Gauss–Legendre in `cos θ` times a
//! uniform rule in `φ`.
//!
//! Used as the numerical oracle for the closed-form projections and for BRDF
//! tabulation. The polar axis can be re-aligned and the `cos θ` range split
//! at given breakpoints, so that an indicator whose boundary is a circle
//! about that axis is integrated exactly.

use std::f64::consts::PI;

use super::basis::eval_basis_into;
use super::ShVector;
use crate::math::{Direction, Frame, Vec3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // derivative of P_n
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A product rule over the sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    theta_nodes: usize,
    phi_nodes: usize,
    frame: Frame,
    breaks: Vec<f64>,
}

impl SphereRule {
    pub fn new(theta_nodes: usize, phi_nodes: usize) -> Self {
        SphereRule {
            theta_nodes: theta_nodes.max(1),
            phi_nodes: phi_nodes.max(1),
            frame: Frame { x: Direction::X, y: Direction::Y, z: Direction::Z },
            breaks: Vec::new(),
        }
    }

    /// `2N+2` Gauss nodes in `cos θ` and `4N+4` uniform `φ` samples: exact
    /// for products of two basis functions up to `bands` bands.
    pub fn for_bands(bands: usize) -> Self {
        Self::new(2 * bands + 2, 4 * bands + 4)
    }

    /// Uses `axis` as the polar axis of the rule.
    pub fn aligned_to(mut self, axis: Direction) -> Self {
        self.frame = Frame::from_normal(axis);
        self
    }

    /// Splits the `cos θ` range at each breakpoint; every piece gets its own
    /// full set of Gauss nodes.
    pub fn with_breaks(mut self, cos_breaks: &[f64]) -> Self {
        self.breaks = cos_breaks.iter().copied().filter(|c| c.abs() < 1.0).collect();
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
        self
    }

    /// Only integrate `cos θ ∈ [lo, hi]` about the rule axis; the integrand
    /// is taken to vanish elsewhere.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![-1.0];
        edges.extend(self.breaks.iter().copied());
        edges.push(1.0);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Every `(direction, weight)` pair of the rule.
    pub fn points(&self) -> Vec<(Direction, f64)> {
        self.points_in(&self.pieces())
    }

    /// Points restricted to the given `cos θ` pieces.
    pub fn points_in(&self, pieces: &[(f64, f64)]) -> Vec<(Direction, f64)> {
        let (x, w) = gauss_legendre(self.theta_nodes);
        let dphi = 2.0 * PI / self.phi_nodes as f64;
        let mut out = Vec::with_capacity(pieces.len() * self.theta_nodes * self.phi_nodes);
        for &(lo, hi) in pieces {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (xi, wi) in x.iter().zip(&w) {
                let ct = mid + half * xi;
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                for j in 0..self.phi_nodes {
                    let phi = (j as f64 + 0.5) * dphi;
                    let local = Vec3::new(st * phi.cos(), st * phi.sin(), ct);
                    let d = Direction::new(self.frame.to_world(local)).expect("unit local direction");
                    out.push((d, wi * half * dphi));
                }
            }
        }
        out
    }

    /// `∫ f dω` under this rule.
    pub fn integrate(&self, f: impl Fn(Direction) -> f64) -> f64 {
        self.points().into_iter().map(|(d, w)| w * f(d)).sum()
    }
}

/// Projects `f` onto `bands` bands with [`SphereRule::for_bands`].
pub fn project_quadrature(f: impl Fn(Direction) -> f64, bands: usize) -> ShVector {
    project_quadrature_with(f, bands, &SphereRule::for_bands(bands))
}

/// Projects `f` onto `bands` bands with the given rule.
pub fn project_quadrature_with(f: impl Fn(Direction) -> f64, bands: usize, rule: &SphereRule) -> ShVector {
    let mut out = ShVector::zeros(bands);
    let mut basis = vec![0.0; bands * bands];
    for (d, w) in rule.points() {
        let v = f(d) * w;
        if v == 0.0 {
            continue;
        }
        eval_basis_into(bands, d, &mut basis);
        for (o, b) in out.coeffs_mut().iter_mut().zip(&basis) {
            *o += v * b;
        }
    }
    out
}
