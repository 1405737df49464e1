//! Small 3-D vector and frame types used throughout the renderer.

use std::ops::{Add, AddAssign, Div, Index, Mul, MulAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Vec3::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    /// Returns `None` for zero or non-finite vectors.
    pub fn try_normalize(self) -> Option<Vec3> {
        let len = self.length();
        if len > 0.0 && len.is_finite() {
            Some(self / len)
        } else {
            None
        }
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn max_element(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Component-wise product.
impl Mul for Vec3 {
    type Output = Vec3;
    fn mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }
}

impl MulAssign<f64> for Vec3 {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Linear RGB triple. Used for albedo, flux and radiance alike.
pub type Rgb = Vec3;

/// A unit-length direction.
///
/// Construction normalizes, so `x² + y² + z²` is one to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec3);

impl Direction {
    pub const X: Direction = Direction(Vec3::X);
    pub const Y: Direction = Direction(Vec3::Y);
    pub const Z: Direction = Direction(Vec3::Z);

    /// Normalizes `v`; `None` when `v` has no usable length.
    pub fn new(v: Vec3) -> Option<Direction> {
        v.try_normalize().map(Direction)
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Option<Direction> {
        Direction::new(Vec3::new(x, y, z))
    }

    /// Trusts the caller that `v` is already unit length.
    pub fn new_unchecked(v: Vec3) -> Direction {
        debug_assert!((v.length_squared() - 1.0).abs() < 1e-6, "not unit: {v:?}");
        Direction(v)
    }

    /// Spherical coordinates about +z: `theta` from the pole, `phi` from +x.
    pub fn from_spherical(theta: f64, phi: f64) -> Direction {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction(Vec3::new(st * cp, st * sp, ct))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, o: Direction) -> f64 {
        self.0.dot(o.0)
    }

    /// Angle to `o` in radians, robust near 0 and π.
    pub fn angle_to(self, o: Direction) -> f64 {
        let c = self.dot(o).clamp(-1.0, 1.0);
        c.acos()
    }

    pub fn reflect(self, n: Direction) -> Direction {
        Direction(n.0 * (2.0 * self.dot(n)) - self.0)
    }
}

impl Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

impl From<Direction> for Vec3 {
    fn from(d: Direction) -> Vec3 {
        d.0
    }
}

/// Right-handed orthonormal frame; `z` is the frame normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x: Direction,
    pub y: Direction,
    pub z: Direction,
}

impl Frame {
    /// Branchless basis from a single normal (Duff et al. construction).
    pub fn from_normal(n: Direction) -> Frame {
        let n = n.vec();
        let sign = 1.0f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let x = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let y = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        Frame {
            x: Direction::new_unchecked(x),
            y: Direction::new_unchecked(y),
            z: Direction::new_unchecked(n),
        }
    }

    /// Frame with `z = n` and `x` along the tangential part of `hint`, so
    /// that `hint` lies in the local xz half-plane with non-negative x.
    /// Falls back to [`Frame::from_normal`] when `hint` is parallel to `n`.
    pub fn from_normal_and_hint(n: Direction, hint: Vec3) -> Frame {
        let nv = n.vec();
        let tangential = hint - nv * hint.dot(nv);
        if tangential.length_squared() < 1e-20 * hint.length_squared().max(1e-300) {
            return Frame::from_normal(n);
        }
        match Direction::new(tangential) {
            Some(x) => {
                let y = Direction::new_unchecked(nv.cross(x.vec()));
                Frame { x, y, z: n }
            }
            None => Frame::from_normal(n),
        }
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.x.vec()), v.dot(self.y.vec()), v.dot(self.z.vec()))
    }

    pub fn to_local_dir(&self, d: Direction) -> Direction {
        // re-normalize to absorb rounding from the projection
        Direction::new(self.to_local(d.vec())).unwrap_or(Direction::Z)
    }

    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.x.vec() * v.x + self.y.vec() * v.y + self.z.vec() * v.z
    }
}

/// Rigid transform: rotation (as three column directions) then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rigid {
    pub rotation: [Vec3; 3],
    pub translation: Vec3,
}

impl Rigid {
    /// Rotation of `angle` radians about `axis`, followed by `translation`.
    pub fn from_axis_angle(axis: Direction, angle: f64, translation: Vec3) -> Rigid {
        let (s, c) = angle.sin_cos();
        let a = axis.vec();
        let t = 1.0 - c;
        let col = |e: Vec3| e * c + a.cross(e) * s + a * (a.dot(e) * t);
        Rigid {
            rotation: [col(Vec3::X), col(Vec3::Y), col(Vec3::Z)],
            translation,
        }
    }

    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation[0] * v.x + self.rotation[1] * v.y + self.rotation[2] * v.z
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.apply_vector(p) + self.translation
    }

    pub fn apply_direction(&self, d: Direction) -> Direction {
        Direction::new(self.apply_vector(d.vec())).expect("rotation preserves length")
    }
}

pub fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

/// Rec. 709 luma weights.
pub fn luminance(c: Rgb) -> f64 {
    0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z
}
