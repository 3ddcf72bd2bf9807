//! Normal cones and the closest-silhouette query.
//!
//! An edge is a silhouette from `x` when one adjacent face is seen front-on
//! and the other back-on, or when it is a rim edge of the filtered surface.
//! The edge tree stores a cone over all adjacent face normals per node so
//! that whole subtrees whose normals cannot be perpendicular to any view
//! direction from `x` are skipped.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use glam::DVec3;

use super::bvh::{Aabb, Bvh};
use super::primitives::closest_point_on_segment;
use super::Scene;

/// Cone of directions: all normals lie within `half_angle` of `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalCone {
    pub axis: DVec3,
    pub half_angle: f64,
    cos_half: f64,
    sin_half: f64,
}

impl NormalCone {
    pub const FULL: NormalCone = NormalCone {
        axis: DVec3::Z,
        half_angle: PI,
        cos_half: -1.0,
        sin_half: 0.0,
    };

    pub fn new(axis: DVec3, half_angle: f64) -> Self {
        NormalCone {
            axis,
            half_angle,
            cos_half: half_angle.cos(),
            sin_half: half_angle.sin(),
        }
    }

    /// A (not necessarily minimal) cone enclosing the unit `normals`.
    pub fn enclosing(normals: impl IntoIterator<Item = DVec3> + Clone) -> Self {
        let sum: DVec3 = normals.clone().into_iter().sum();
        let len = sum.length();
        if len < 1e-9 {
            return Self::FULL;
        }
        let axis = sum / len;
        let half_angle = normals
            .into_iter()
            .map(|n| axis.dot(n).clamp(-1.0, 1.0).acos())
            .fold(0.0, f64::max);
        Self::new(axis, half_angle)
    }

    /// Smallest cosine between any cone direction and any direction from `x`
    /// to a point of `bounds`, clamped at zero. Zero means some normal can be
    /// perpendicular to some view direction.
    ///
    /// With θ the angle between the axis and the view of the box's bounding
    /// sphere (folded into [0, π/2]) and s the half-angle plus the sphere's
    /// angular radius, the bound is cos(θ + s).
    pub fn min_abs_cos(&self, x: DVec3, bounds: &Aabb) -> f64 {
        if self.half_angle >= FRAC_PI_2 {
            return 0.0;
        }
        let to_center = bounds.center() - x;
        let dist2 = to_center.length_squared();
        let radius = 0.5 * bounds.diagonal();
        if dist2 <= radius * radius {
            return 0.0;
        }
        let dist = dist2.sqrt();
        let sin_b = radius / dist;
        let cos_b = (1.0 - sin_b * sin_b).max(0.0).sqrt();
        let cos_s = cos_b * self.cos_half - sin_b * self.sin_half;
        if cos_s <= 0.0 {
            return 0.0;
        }
        let sin_s = sin_b * self.cos_half + cos_b * self.sin_half;
        let cos_t = (to_center.dot(self.axis) / dist).abs().min(1.0);
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        (cos_t * cos_s - sin_t * sin_s).max(0.0)
    }

    fn may_be_perpendicular(&self, x: DVec3, bounds: &Aabb) -> bool {
        self.min_abs_cos(x, bounds) <= 0.0
    }
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    a: DVec3,
    b: DVec3,
    n0: DVec3,
    /// Second adjacent face normal; `None` for rim edges of the filter.
    n1: Option<DVec3>,
}

#[derive(Debug)]
pub(super) struct EdgeSet {
    edges: Vec<Edge>,
    bvh: Bvh,
    cones: Vec<NormalCone>,
    has_rim: Vec<bool>,
}

impl EdgeSet {
    pub(super) fn build(scene: &Scene, triangles: &[u32]) -> Self {
        let mut adjacency: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for &t in triangles {
            let tri = scene.triangles()[t as usize];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                adjacency.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut keys: Vec<(u32, u32)> = adjacency.keys().copied().collect();
        keys.sort_unstable();
        let v = scene.vertices();
        let edges: Vec<Edge> = keys
            .iter()
            .map(|key| {
                let faces = &adjacency[key];
                Edge {
                    a: v[key.0 as usize],
                    b: v[key.1 as usize],
                    n0: scene.normal(faces[0]),
                    // non-manifold edges never occur in accepted meshes; treat
                    // anything other than two faces as a rim
                    n1: (faces.len() == 2).then(|| scene.normal(faces[1])),
                }
            })
            .collect();
        let boxes: Vec<Aabb> = edges.iter().map(|e| Aabb::from_points([&e.a, &e.b])).collect();
        let bvh = Bvh::build(&boxes);
        let cones = bvh.per_node(|prims| {
            NormalCone::enclosing(
                prims
                    .iter()
                    .flat_map(|&p| {
                        let e = &edges[p as usize];
                        [Some(e.n0), e.n1]
                    })
                    .flatten(),
            )
        });
        let has_rim = bvh.per_node(|prims| prims.iter().any(|&p| edges[p as usize].n1.is_none()));
        EdgeSet {
            edges,
            bvh,
            cones,
            has_rim,
        }
    }

    /// Distance to the nearest silhouette edge, or `limit` if none is closer.
    pub(super) fn closest_silhouette(&self, x: DVec3, diagonal: f64, limit: f64) -> f64 {
        let nodes = self.bvh.nodes();
        if nodes.is_empty() {
            return limit;
        }
        let eps = 1e-10 * diagonal;
        let mut best = limit;
        let mut stack: Vec<(usize, f64)> = vec![(0, nodes[0].bounds.distance_squared(x).sqrt())];
        while let Some((i, d)) = stack.pop() {
            if d >= best {
                continue;
            }
            let node = &nodes[i];
            if !self.has_rim[i] && !self.cones[i].may_be_perpendicular(x, &node.bounds) {
                continue;
            }
            if node.is_leaf() {
                for &p in self.bvh.leaf_primitives(node) {
                    let e = &self.edges[p as usize];
                    let dist = (closest_point_on_segment(x, e.a, e.b) - x).length();
                    if dist < best && is_silhouette(x, e, eps) {
                        best = dist;
                    }
                }
            } else {
                let l = i + 1;
                let r = node.offset as usize;
                let dl = nodes[l].bounds.distance_squared(x).sqrt();
                let dr = nodes[r].bounds.distance_squared(x).sqrt();
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        best
    }
}

fn is_silhouette(x: DVec3, e: &Edge, eps: f64) -> bool {
    let Some(n1) = e.n1 else {
        return true;
    };
    let view = x - e.a;
    let d0 = view.dot(e.n0);
    let d1 = view.dot(n1);
    let z0 = d0.abs() <= eps;
    let z1 = d1.abs() <= eps;
    match (z0, z1) {
        (true, true) => false,
        (true, false) => d1 > 0.0,
        (false, true) => d0 > 0.0,
        (false, false) => d0 * d1 < 0.0,
    }
}
