//! Bounding volume hierarchy over scene triangles.

use super::{Ray, Triangle};
use crate::math::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        lo: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        hi: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    fn grow(self, p: Vec3) -> Aabb {
        Aabb { lo: self.lo.min(p), hi: self.hi.max(p) }
    }

    fn union(self, o: Aabb) -> Aabb {
        Aabb { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Whether the ray overlaps the box within `(t_min, t_max]`. The far
    /// bound gets a little slack so that hits lying on a box face, and exact
    /// distance ties, are never culled.
    fn overlaps(&self, origin: Vec3, inv: Vec3, t_min: f64, t_max: f64) -> bool {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (self.lo[a] - origin[a]) * inv[a];
            let mut far = (self.hi[a] - origin[a]) * inv[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf (ray inside a slab plane) must not reject the box.
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far);
            }
            if t0 > t1 + 1e-9 * t1.abs().max(1.0) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first entry in `order`; interior: index of the right child (the
    /// left child follows the node directly).
    index: usize,
    /// Triangle count for leaves, 0 for interior nodes.
    count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

/// Möller–Trumbore; returns `(t, u, v)` for `t` in `(t_min, t_max)`.
pub(crate) fn intersect_triangle(tri: &Triangle, ray: &Ray) -> Option<(f64, f64, f64)> {
    let e1 = tri.p[1] - tri.p[0];
    let e2 = tri.p[2] - tri.p[0];
    let d = ray.dir.vec();
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri.p[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t > ray.t_min && t < ray.t_max {
        Some((t, u, v))
    } else {
        None
    }
}

impl Bvh {
    pub fn build(triangles: &[Triangle]) -> Bvh {
        let mut bvh = Bvh { nodes: Vec::new(), order: (0..triangles.len()).collect() };
        if triangles.is_empty() {
            return bvh;
        }
        let boxes: Vec<Aabb> = triangles.iter().map(|t| t.p.iter().fold(Aabb::EMPTY, |b, p| b.grow(*p))).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.lo + b.hi) * 0.5).collect();
        let n = triangles.len();
        bvh.build_node(&boxes, &centroids, 0, n);
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], centroids: &[Vec3], start: usize, end: usize) -> usize {
        let slot = self.nodes.len();
        let items = &self.order[start..end];
        let bounds = items.iter().fold(Aabb::EMPTY, |b, &i| b.union(boxes[i]));
        self.nodes.push(Node { bounds, index: start, count: end - start });
        if end - start <= LEAF_SIZE {
            return slot;
        }
        let cb = items.iter().fold(Aabb::EMPTY, |b, &i| b.grow(centroids[i]));
        let ext = cb.hi - cb.lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
        if ext[axis] <= 0.0 {
            return slot;
        }
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.build_node(boxes, centroids, start, mid);
        let right = self.build_node(boxes, centroids, mid, end);
        self.nodes[slot].index = right;
        self.nodes[slot].count = 0;
        slot
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        self.nodes.first().map(|n| (n.bounds.lo, n.bounds.hi))
    }

    fn traverse(&self, ray: &Ray, mut limit: impl FnMut() -> f64, mut leaf: impl FnMut(usize) -> bool) {
        if self.nodes.is_empty() {
            return;
        }
        let d = ray.dir.vec();
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps(ray.origin, inv, ray.t_min, limit()) {
                continue;
            }
            if node.count > 0 {
                for &ti in &self.order[node.index..node.index + node.count] {
                    if leaf(ti) {
                        return;
                    }
                }
            } else {
                stack.push(node.index);
                stack.push(ni + 1);
            }
        }
    }

    /// Nearest `(t, triangle, u, v)`; equal distances resolve to the lowest
    /// triangle index.
    pub(crate) fn intersect(&self, tris: &[Triangle], ray: &Ray) -> Option<(f64, usize, f64, f64)> {
        let best = std::cell::Cell::new(None::<(f64, usize, f64, f64)>);
        self.traverse(
            ray,
            || best.get().map_or(ray.t_max, |b| b.0),
            |ti| {
                if let Some((t, u, v)) = intersect_triangle(&tris[ti], ray) {
                    let better = match best.get() {
                        None => true,
                        Some(b) => t < b.0 || (t == b.0 && ti < b.1),
                    };
                    if better {
                        best.set(Some((t, ti, u, v)));
                    }
                }
                false
            },
        );
        best.get()
    }

    pub(crate) fn any_hit(&self, tris: &[Triangle], ray: &Ray) -> bool {
        let mut found = false;
        self.traverse(ray, || ray.t_max, |ti| {
            found = intersect_triangle(&tris[ti], ray).is_some();
            found
        });
        found
    }

    pub(crate) fn intersect_all(&self, tris: &[Triangle], ray: &Ray, out: &mut impl FnMut(f64, usize, f64, f64)) {
        self.traverse(ray, || ray.t_max, |ti| {
            if let Some((t, u, v)) = intersect_triangle(&tris[ti], ray) {
                out(t, ti, u, v);
            }
            false
        });
    }
}
