//! Per-triangle bounds of the frozen Robin coefficient and the star radius
//! certification built on them.
//!
//! A radius `R` is certified at `x` when `μ_eff(z) · G/P(x, z) ≤ 1` for every
//! reflecting point `z` within the ball, so that every reflectance lies in
//! `[0, 1]`. The test walks the reflecting-triangle BVH and only descends
//! into nodes whose coarse bound cannot rule out a violation.

use glam::DVec3;

use crate::geometry::{closest_point_on_triangle, LabelSet, Scene};

#[derive(Clone, Debug)]
pub struct RobinBounds {
    /// `[lo, hi]` per scene triangle; `[0, 0]` for Dirichlet triangles.
    intervals: Vec<[f64; 2]>,
    /// Maximum `hi` per node of the reflecting BVH.
    node_max: Vec<f64>,
    global_max: f64,
}

/// Star radius with a flag telling whether certification gave up at the
/// minimum radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarRadius {
    pub radius: f64,
    pub clamped: bool,
}

impl RobinBounds {
    /// Builds node maxima from per-triangle intervals (indexed by scene
    /// triangle).
    pub fn from_intervals(scene: &Scene, intervals: Vec<[f64; 2]>) -> Self {
        assert_eq!(intervals.len(), scene.triangle_count());
        let (node_max, global_max) = match scene.filter_bvh(LabelSet::Reflecting) {
            Ok((bvh, _)) => {
                let tris = scene.filter_triangles(LabelSet::Reflecting).unwrap();
                let node_max = bvh.per_node(|prims| {
                    prims
                        .iter()
                        .map(|&p| intervals[tris[p as usize] as usize][1])
                        .fold(0.0, f64::max)
                });
                let g = node_max.first().copied().unwrap_or(0.0);
                (node_max, g)
            }
            Err(_) => (Vec::new(), 0.0),
        };
        RobinBounds {
            intervals,
            node_max,
            global_max,
        }
    }

    /// The same interval on every reflecting triangle.
    pub fn uniform(scene: &Scene, lo: f64, hi: f64) -> Self {
        let intervals = scene
            .labels()
            .iter()
            .map(|&l| {
                if LabelSet::Reflecting.contains(l) {
                    [lo, hi]
                } else {
                    [0.0, 0.0]
                }
            })
            .collect();
        Self::from_intervals(scene, intervals)
    }

    pub fn zero(scene: &Scene) -> Self {
        Self::uniform(scene, 0.0, 0.0)
    }

    pub fn interval(&self, triangle: u32) -> [f64; 2] {
        self.intervals[triangle as usize]
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn node_max(&self) -> &[f64] {
        &self.node_max
    }

    pub fn global_max(&self) -> f64 {
        self.global_max
    }
}

/// Largest `r(R − r)` for `r` in `[lo, hi]`.
fn max_r_times_rest(lo: f64, hi: f64, big_r: f64) -> f64 {
    let r = (0.5 * big_r).clamp(lo, hi);
    r * (big_r - r)
}

/// True when every reflecting point within `radius` of `x` satisfies
/// `μ_eff · G/P ≤ 1` under the stored bounds.
pub fn radius_is_certified(scene: &Scene, bounds: &RobinBounds, x: DVec3, radius: f64) -> bool {
    if bounds.global_max <= 0.0 {
        return true;
    }
    let Ok((bvh, cones)) = scene.filter_bvh(LabelSet::Reflecting) else {
        return true;
    };
    let tris = scene.filter_triangles(LabelSet::Reflecting).unwrap();
    let coplanar = 1e-9 * scene.diagonal();
    let nodes = bvh.nodes();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let node = &nodes[i];
        let mu = bounds.node_max[i];
        if mu <= 0.0 {
            continue;
        }
        let dmin = node.bounds.distance_squared(x).sqrt();
        if dmin >= radius {
            continue;
        }
        let cos_lb = cones[i].min_abs_cos(x, &node.bounds);
        if cos_lb > 0.0 {
            let dmax = node.bounds.max_distance(x).min(radius);
            let gp = max_r_times_rest(dmin, dmax, radius) / (radius * cos_lb);
            if mu * gp <= 1.0 {
                continue;
            }
        }
        if !node.is_leaf() {
            stack.push(node.offset as usize);
            stack.push(i + 1);
            continue;
        }
        for &p in bvh.leaf_primitives(node) {
            let t = tris[p as usize];
            let hi = bounds.intervals[t as usize][1];
            if hi <= 0.0 {
                continue;
            }
            let [a, b, c] = scene.triangle_vertices(t);
            // every point of the triangle is seen under cos = d / r
            let d = scene.normal(t).dot(x - a).abs();
            if d <= coplanar {
                continue;
            }
            let rmin = (closest_point_on_triangle(x, a, b, c).0 - x).length();
            if rmin >= radius {
                continue;
            }
            let rmax = (a - x)
                .length()
                .max((b - x).length())
                .max((c - x).length())
                .min(radius);
            // r²(R − r) peaks at r = 2R/3
            let r = (2.0 * radius / 3.0).clamp(rmin, rmax);
            if hi * r * r * (radius - r) / (radius * d) > 1.0 {
                return false;
            }
        }
    }
    true
}

/// Largest `R` with `hi · r²(R − r) / (R d) ≤ 1` at `r = clamp(2R/3, rmin, rmax)`,
/// the exact leaf test for a triangle at plane distance `d` whose points lie
/// between `rmin` and `rmax` from the center. The left side is nondecreasing
/// in `R`, so the crossing is unique.
fn triangle_radius_limit(hi: f64, d: f64, rmin: f64, rmax: f64) -> f64 {
    let k = d / hi;
    if rmin * rmin > 3.0 * k {
        // crossing while r is pinned at rmin
        return rmin / (1.0 - k / (rmin * rmin));
    }
    if rmax * rmax > 3.0 * k {
        // crossing on the interior branch r = 2R/3
        return (6.75 * k).sqrt();
    }
    if k >= rmax * rmax {
        f64::INFINITY
    } else {
        rmax / (1.0 - k / (rmax * rmax))
    }
}

/// Supremum of the radii up to `limit` that pass `radius_is_certified`'s
/// leaf test, found in one branch-and-bound pass over the reflecting BVH.
pub fn max_certified_radius(scene: &Scene, bounds: &RobinBounds, x: DVec3, limit: f64) -> f64 {
    if bounds.global_max <= 0.0 {
        return limit;
    }
    let Ok((bvh, cones)) = scene.filter_bvh(LabelSet::Reflecting) else {
        return limit;
    };
    let tris = scene.filter_triangles(LabelSet::Reflecting).unwrap();
    let coplanar = 1e-9 * scene.diagonal();
    let nodes = bvh.nodes();
    let mut best = limit;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let node = &nodes[i];
        let mu = bounds.node_max[i];
        if mu <= 0.0 {
            continue;
        }
        let dmin = node.bounds.distance_squared(x).sqrt();
        if dmin >= best {
            continue;
        }
        // a node that passes at `best` passes at every smaller radius
        let cos_lb = cones[i].min_abs_cos(x, &node.bounds);
        if cos_lb > 0.0 {
            let dmax = node.bounds.max_distance(x).min(best);
            if mu * max_r_times_rest(dmin, dmax, best) <= best * cos_lb {
                continue;
            }
        }
        if !node.is_leaf() {
            // nearer child on top so `best` shrinks early
            let (a, b) = (i + 1, node.offset as usize);
            let da = nodes[a].bounds.distance_squared(x);
            let db = nodes[b].bounds.distance_squared(x);
            if da <= db {
                stack.push(b);
                stack.push(a);
            } else {
                stack.push(a);
                stack.push(b);
            }
            continue;
        }
        for &p in bvh.leaf_primitives(node) {
            let t = tris[p as usize];
            let hi = bounds.intervals[t as usize][1];
            if hi <= 0.0 {
                continue;
            }
            let [a, b, c] = scene.triangle_vertices(t);
            let d = scene.normal(t).dot(x - a).abs();
            if d <= coplanar {
                continue;
            }
            let rmax = (a - x).length().max((b - x).length()).max((c - x).length());
            // a wider distance range only lowers the limit, so a cheap lower
            // bound on rmin settles most triangles without the closest point
            if triangle_radius_limit(hi, d, d.max(dmin), rmax) >= best {
                continue;
            }
            let rmin = (closest_point_on_triangle(x, a, b, c).0 - x).length();
            if rmin >= best {
                continue;
            }
            best = best.min(triangle_radius_limit(hi, d, rmin, rmax));
        }
    }
    best
}

/// Star radius at `x`: the largest certified radius, capped by the Dirichlet
/// distance, the scene diagonal and the reflecting silhouette distance, and
/// floored at `min_radius` (flagged when certification needed less).
pub fn certified_star_radius(
    scene: &Scene,
    bounds: &RobinBounds,
    x: DVec3,
    dirichlet_distance: f64,
    min_radius: f64,
) -> StarRadius {
    let limit = dirichlet_distance.min(scene.diagonal());
    let certified = max_certified_radius(scene, bounds, x, limit);
    // stay strictly inside the certified range against roundoff
    let mut radius = if certified < limit {
        certified * (1.0 - 1e-9)
    } else {
        limit
    };
    if let Ok(sil) = scene.closest_silhouette_within(x, LabelSet::Reflecting, radius) {
        radius = radius.min(sil);
    }
    if radius <= min_radius {
        return StarRadius {
            radius: min_radius,
            clamped: certified < min_radius,
        };
    }
    StarRadius {
        radius,
        clamped: false,
    }
}
