//! Labeled triangle meshes and the spatial queries a walk needs.

mod bvh;
mod io;
mod primitives;
pub mod shapes;
mod silhouette;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bvh::{Aabb, Bvh, BvhNode};
pub use io::{read_label_file, read_mesh, TriangleMesh};
pub use primitives::{
    closest_point_on_segment, closest_point_on_triangle, intersect_triangle, solid_angle,
};
pub use silhouette::NormalCone;
use silhouette::EdgeSet;

/// Relative self-intersection guard for rays leaving the boundary.
/// A face whose normal is this close to perpendicular to a segment does not
/// block it.
const PARALLEL_TOLERANCE: f64 = 1e-9;
pub const RAY_GUARD: f64 = 1e-6;
/// Triangles below this area (relative to diagonal²) are dropped at load.
pub const DEGENERATE_AREA: f64 = 1e-12;
/// Loads with more than this fraction of degenerate faces are rejected.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("failed to parse {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("label file {path}, line {line}: {reason}")]
    LabelFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("mesh is not watertight: {open_edges} open and {nonmanifold_edges} non-manifold edges (first at vertices {first:?})")]
    NotWatertight {
        open_edges: usize,
        nonmanifold_edges: usize,
        first: (u32, u32),
    },
    #[error("{degenerate} of {total} triangles are degenerate (area < {threshold:e})")]
    Degenerate {
        degenerate: usize,
        total: usize,
        threshold: f64,
    },
    #[error("mesh has no triangles")]
    Empty,
    #[error("label rule yields {faces} labels for {expected} faces")]
    LabelCount { faces: usize, expected: usize },
    #[error("no triangles match the {0} filter")]
    EmptyFilter(LabelSet),
    #[error("vertex index {index} out of range for {count} vertices")]
    BadIndex { index: u32, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLabel {
    Dirichlet,
    Reflecting,
}

impl FromStr for BoundaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "D" | "DIRICHLET" => Ok(Self::Dirichlet),
            "R" | "REFLECTING" | "ROBIN" | "RADIATIVE" => Ok(Self::Reflecting),
            _ => Err(format!("unknown boundary label {s:?}")),
        }
    }
}

/// Subset of boundary labels a query is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelSet {
    All,
    Dirichlet,
    Reflecting,
}

impl LabelSet {
    pub fn contains(self, label: BoundaryLabel) -> bool {
        match self {
            LabelSet::All => true,
            LabelSet::Dirichlet => label == BoundaryLabel::Dirichlet,
            LabelSet::Reflecting => label == BoundaryLabel::Reflecting,
        }
    }

    fn slot(self) -> usize {
        match self {
            LabelSet::All => 0,
            LabelSet::Dirichlet => 1,
            LabelSet::Reflecting => 2,
        }
    }

    const ALL_SETS: [LabelSet; 3] = [LabelSet::All, LabelSet::Dirichlet, LabelSet::Reflecting];
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LabelSet::All => "all",
            LabelSet::Dirichlet => "dirichlet",
            LabelSet::Reflecting => "reflecting",
        };
        f.write_str(s)
    }
}

/// How faces receive their boundary label.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelRule {
    /// Every face gets the same label.
    Uniform(BoundaryLabel),
    /// Faces whose centroid `c` satisfies `(c - point)·normal > 0` are
    /// Dirichlet; all others are reflecting.
    HalfSpace { point: DVec3, normal: DVec3 },
    /// One label per input face, in file order.
    PerFace(Vec<BoundaryLabel>),
}

impl LabelRule {
    fn labels(&self, centroids: &[DVec3]) -> Result<Vec<BoundaryLabel>, GeometryError> {
        match self {
            LabelRule::Uniform(l) => Ok(vec![*l; centroids.len()]),
            LabelRule::HalfSpace { point, normal } => Ok(centroids
                .iter()
                .map(|c| {
                    if (*c - *point).dot(*normal) > 0.0 {
                        BoundaryLabel::Dirichlet
                    } else {
                        BoundaryLabel::Reflecting
                    }
                })
                .collect()),
            LabelRule::PerFace(l) if l.len() == centroids.len() => Ok(l.clone()),
            LabelRule::PerFace(l) => Err(GeometryError::LabelCount {
                faces: l.len(),
                expected: centroids.len(),
            }),
        }
    }
}

/// A point on the boundary together with the triangle it lies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub position: DVec3,
    pub normal: DVec3,
    pub triangle: u32,
    pub barycentric: [f64; 3],
}

/// Outcome of casting a ray inside a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BallHit {
    /// The ray met the boundary at `distance` from the origin.
    Boundary { sample: SurfaceSample, distance: f64 },
    /// No boundary inside the ball; the ray leaves through the sphere.
    SphereExit { point: DVec3 },
}

/// Immutable labeled triangle mesh with acceleration structures.
#[derive(Debug)]
pub struct Scene {
    vertices: Vec<DVec3>,
    triangles: Vec<[u32; 3]>,
    labels: Vec<BoundaryLabel>,
    normals: Vec<DVec3>,
    areas: Vec<f64>,
    source_faces: Vec<u32>,
    bounds: Aabb,
    diagonal: f64,
    filtered: [Option<FilteredSet>; 3],
}

/// Per-filter acceleration data.
#[derive(Debug)]
struct FilteredSet {
    triangles: Vec<u32>,
    bvh: Bvh,
    cones: Vec<NormalCone>,
    cumulative_area: Vec<f64>,
    node_area: Vec<f64>,
    edges: EdgeSet,
}

impl Scene {
    /// Loads an OBJ or PLY file and labels its faces.
    pub fn load(path: &Path, rule: &LabelRule) -> Result<Scene, GeometryError> {
        let mesh = read_mesh(path)?;
        Scene::from_mesh(mesh, rule)
    }

    pub fn from_mesh(mesh: TriangleMesh, rule: &LabelRule) -> Result<Scene, GeometryError> {
        Self::build(mesh, rule, true)
    }

    /// Builds without the watertightness check. Only used for open test patches.
    #[doc(hidden)]
    pub fn from_open_mesh(mesh: TriangleMesh, rule: &LabelRule) -> Result<Scene, GeometryError> {
        Self::build(mesh, rule, false)
    }

    fn build(mesh: TriangleMesh, rule: &LabelRule, closed: bool) -> Result<Scene, GeometryError> {
        let TriangleMesh {
            vertices,
            triangles,
        } = mesh;
        if triangles.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(&index) = triangles.iter().flatten().find(|&&i| i as usize >= vertices.len()) {
            return Err(GeometryError::BadIndex {
                index,
                count: vertices.len(),
            });
        }
        if closed {
            check_watertight(&triangles)?;
        }
        let bounds = Aabb::from_points(triangles.iter().flatten().map(|&i| &vertices[i as usize]));
        let diagonal = bounds.diagonal();

        let centroids: Vec<DVec3> = triangles
            .iter()
            .map(|t| (vertices[t[0] as usize] + vertices[t[1] as usize] + vertices[t[2] as usize]) / 3.0)
            .collect();
        let all_labels = rule.labels(&centroids)?;

        // orient outward: flip everything if the enclosed volume is negative
        let signed_volume: f64 = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum();
        let flip = closed && signed_volume < 0.0;
        if flip {
            log::warn!("mesh is inward oriented; flipping all faces");
        }

        let area_floor = DEGENERATE_AREA * diagonal * diagonal;
        let mut kept = Scene {
            vertices,
            triangles: Vec::with_capacity(triangles.len()),
            labels: Vec::with_capacity(triangles.len()),
            normals: Vec::with_capacity(triangles.len()),
            areas: Vec::with_capacity(triangles.len()),
            source_faces: Vec::with_capacity(triangles.len()),
            bounds,
            diagonal,
            filtered: [None, None, None],
        };
        let mut degenerate = 0;
        for (i, t) in triangles.iter().enumerate() {
            let t = if flip { [t[0], t[2], t[1]] } else { *t };
            let [a, b, c] = t.map(|k| kept.vertices[k as usize]);
            let cross = (b - a).cross(c - a);
            let area = 0.5 * cross.length();
            if !(area > area_floor) {
                degenerate += 1;
                continue;
            }
            kept.triangles.push(t);
            kept.labels.push(all_labels[i]);
            kept.normals.push(cross / (2.0 * area));
            kept.areas.push(area);
            kept.source_faces.push(i as u32);
        }
        if degenerate > 0 {
            let total = triangles.len();
            if degenerate as f64 > MAX_DEGENERATE_FRACTION * total as f64 {
                return Err(GeometryError::Degenerate {
                    degenerate,
                    total,
                    threshold: area_floor,
                });
            }
            log::warn!("dropped {degenerate} degenerate triangles");
        }
        if kept.triangles.is_empty() {
            return Err(GeometryError::Empty);
        }

        for set in LabelSet::ALL_SETS {
            kept.filtered[set.slot()] = kept.build_filtered(set);
        }
        Ok(kept)
    }

    fn build_filtered(&self, set: LabelSet) -> Option<FilteredSet> {
        let triangles: Vec<u32> = (0..self.triangles.len() as u32)
            .filter(|&t| set.contains(self.labels[t as usize]))
            .collect();
        if triangles.is_empty() {
            return None;
        }
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|&t| Aabb::from_points(&self.triangle_vertices(t)))
            .collect();
        let bvh = Bvh::build(&boxes);
        let cones = bvh.per_node(|prims| {
            NormalCone::enclosing(prims.iter().map(|&p| self.normals[triangles[p as usize] as usize]))
        });
        let mut acc = 0.0;
        let cumulative_area = triangles
            .iter()
            .map(|&t| {
                acc += self.areas[t as usize];
                acc
            })
            .collect();
        let node_area = bvh.per_node(|prims| {
            prims
                .iter()
                .map(|&p| self.areas[triangles[p as usize] as usize])
                .sum()
        });
        let edges = EdgeSet::build(self, &triangles);
        Some(FilteredSet {
            triangles,
            bvh,
            cones,
            cumulative_area,
            node_area,
            edges,
        })
    }

    fn filtered(&self, set: LabelSet) -> Result<&FilteredSet, GeometryError> {
        self.filtered[set.slot()]
            .as_ref()
            .ok_or(GeometryError::EmptyFilter(set))
    }

    pub fn has_label(&self, label: BoundaryLabel) -> bool {
        let set = match label {
            BoundaryLabel::Dirichlet => LabelSet::Dirichlet,
            BoundaryLabel::Reflecting => LabelSet::Reflecting,
        };
        self.filtered[set.slot()].is_some()
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn label(&self, triangle: u32) -> BoundaryLabel {
        self.labels[triangle as usize]
    }

    pub fn labels(&self) -> &[BoundaryLabel] {
        &self.labels
    }

    pub fn normal(&self, triangle: u32) -> DVec3 {
        self.normals[triangle as usize]
    }

    pub fn area(&self, triangle: u32) -> f64 {
        self.areas[triangle as usize]
    }

    /// Index of the face in the input mesh this triangle came from.
    pub fn source_face(&self, triangle: u32) -> u32 {
        self.source_faces[triangle as usize]
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Length of the bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// Ray offset used for rays that start on the boundary.
    pub fn ray_guard(&self) -> f64 {
        RAY_GUARD * self.diagonal
    }

    pub fn triangle_vertices(&self, triangle: u32) -> [DVec3; 3] {
        self.triangles[triangle as usize].map(|i| self.vertices[i as usize])
    }

    /// Triangles carrying a label in `set`, in the order used by
    /// [`Scene::filter_bvh`].
    pub fn filter_triangles(&self, set: LabelSet) -> Result<&[u32], GeometryError> {
        Ok(&self.filtered(set)?.triangles)
    }

    /// The BVH over the triangles of `set`; primitive `p` in the tree is
    /// triangle `filter_triangles(set)[p]`.
    pub fn filter_bvh(&self, set: LabelSet) -> Result<(&Bvh, &[NormalCone]), GeometryError> {
        let f = self.filtered(set)?;
        Ok((&f.bvh, &f.cones))
    }

    pub fn filter_area(&self, set: LabelSet) -> Result<f64, GeometryError> {
        Ok(*self.filtered(set)?.cumulative_area.last().unwrap_or(&0.0))
    }

    pub fn sample_on(&self, triangle: u32, barycentric: [f64; 3]) -> SurfaceSample {
        let [a, b, c] = self.triangle_vertices(triangle);
        SurfaceSample {
            position: barycentric[0] * a + barycentric[1] * b + barycentric[2] * c,
            normal: self.normal(triangle),
            triangle,
            barycentric,
        }
    }

    /// Nearest boundary point among the triangles of `filter`.
    pub fn closest_point(
        &self,
        x: DVec3,
        filter: LabelSet,
    ) -> Result<(SurfaceSample, f64), GeometryError> {
        let set = self.filtered(filter)?;
        let nodes = set.bvh.nodes();
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(u32, DVec3, [f64; 3])> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, nodes[0].bounds.distance_squared(x)));
        while let Some((i, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            let node = &nodes[i];
            if node.is_leaf() {
                for &p in set.bvh.leaf_primitives(node) {
                    let t = set.triangles[p as usize];
                    let [a, b, c] = self.triangle_vertices(t);
                    let (q, bary) = closest_point_on_triangle(x, a, b, c);
                    let d2 = (q - x).length_squared();
                    if d2 < best_d2 || (d2 == best_d2 && best.is_some_and(|b| t < b.0)) {
                        best_d2 = d2;
                        best = Some((t, q, bary));
                    }
                }
            } else {
                let l = i + 1;
                let r = node.offset as usize;
                let dl = nodes[l].bounds.distance_squared(x);
                let dr = nodes[r].bounds.distance_squared(x);
                // push the farther child first so the nearer one is popped next
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        let (t, q, bary) = best.expect("non-empty filter has a closest triangle");
        Ok((
            SurfaceSample {
                position: q,
                normal: self.normal(t),
                triangle: t,
                barycentric: bary,
            },
            best_d2.sqrt(),
        ))
    }

    /// Distance from `x` to the nearest silhouette point of the `filter`
    /// boundary, or `+inf` when there is none.
    pub fn closest_silhouette_distance(&self, x: DVec3, filter: LabelSet) -> Result<f64, GeometryError> {
        let set = self.filtered(filter)?;
        Ok(set.edges.closest_silhouette(x, self.diagonal, f64::INFINITY))
    }

    /// Like [`Scene::closest_silhouette_distance`] but stops searching beyond
    /// `max_distance` (returns `max_distance` or more if nothing closer exists).
    pub fn closest_silhouette_within(
        &self,
        x: DVec3,
        filter: LabelSet,
        max_distance: f64,
    ) -> Result<f64, GeometryError> {
        let set = self.filtered(filter)?;
        Ok(set.edges.closest_silhouette(x, self.diagonal, max_distance))
    }

    /// Nearest intersection with any triangle for `t` in `(t_min, t_max)`.
    pub fn intersect_ray(
        &self,
        origin: DVec3,
        dir: DVec3,
        t_min: f64,
        t_max: f64,
        filter: LabelSet,
    ) -> Option<(u32, f64, [f64; 3])> {
        self.intersect_ray_where(origin, dir, t_min, t_max, filter, |_| true)
    }

    fn intersect_ray_where(
        &self,
        origin: DVec3,
        dir: DVec3,
        t_min: f64,
        t_max: f64,
        filter: LabelSet,
        accept: impl Fn(u32) -> bool,
    ) -> Option<(u32, f64, [f64; 3])> {
        let set = self.filtered[filter.slot()].as_ref()?;
        let nodes = set.bvh.nodes();
        let inv = dir.recip();
        let mut best_t = t_max;
        let mut best = None;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        if nodes[0].bounds.intersect_ray(origin, inv, t_min, best_t).is_some() {
            stack.push(0);
        }
        while let Some(i) = stack.pop() {
            let node = &nodes[i];
            if node.is_leaf() {
                for &p in set.bvh.leaf_primitives(node) {
                    let tri = set.triangles[p as usize];
                    let [a, b, c] = self.triangle_vertices(tri);
                    if let Some((t, bary)) = intersect_triangle(origin, dir, a, b, c) {
                        if t > t_min && t < best_t && accept(tri) {
                            best_t = t;
                            best = Some((tri, t, bary));
                        }
                    }
                }
            } else {
                let l = i + 1;
                let r = node.offset as usize;
                let tl = nodes[l].bounds.intersect_ray(origin, inv, t_min, best_t);
                let tr = nodes[r].bounds.intersect_ray(origin, inv, t_min, best_t);
                match (tl, tr) {
                    (Some(a), Some(b)) if a <= b => {
                        stack.push(r);
                        stack.push(l);
                    }
                    (Some(_), Some(_)) => {
                        stack.push(l);
                        stack.push(r);
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// Casts a ray from `x` along unit `dir` and reports the first boundary hit
    /// inside the ball of radius `radius`, or the sphere exit point.
    ///
    /// Rays from boundary points skip the first `ray_guard` to avoid hitting
    /// their own face; rays from interior points do not, since the point may
    /// sit closer than the guard to some face. A hit just past the sphere
    /// (within the guard) is still reported so an exit point never lands in
    /// that sliver, where the next guarded ray could tunnel through.
    pub fn first_hit_in_ball(&self, x: DVec3, dir: DVec3, radius: f64, on_boundary: bool) -> BallHit {
        let guard = self.ray_guard();
        let t_min = if on_boundary { guard } else { 0.0 };
        match self.intersect_ray(x, dir, t_min, radius + guard, LabelSet::All) {
            Some((tri, t, bary)) => BallHit::Boundary {
                sample: SurfaceSample {
                    position: x + t * dir,
                    normal: self.normal(tri),
                    triangle: tri,
                    barycentric: bary,
                },
                distance: t,
            },
            None => BallHit::SphereExit {
                point: x + radius * dir,
            },
        }
    }

    /// Draws a point of the `filter` boundary near `B(x, radius)` by descending
    /// the BVH, picking among overlapping children in proportion to their
    /// area. Returns the point and its area density, or `None` when the draw
    /// lands outside the ball. Every boundary point inside the ball has a
    /// positive density, so `f(z) / pdf` is unbiased for `∫ f` over the part
    /// of the boundary inside the ball.
    pub fn sample_boundary_in_ball<R: Rng + ?Sized>(
        &self,
        x: DVec3,
        radius: f64,
        filter: LabelSet,
        rng: &mut R,
    ) -> Option<(SurfaceSample, f64)> {
        let set = self.filtered[filter.slot()].as_ref()?;
        let nodes = set.bvh.nodes();
        let r2 = radius * radius;
        if nodes.is_empty() || nodes[0].bounds.distance_squared(x) >= r2 {
            return None;
        }
        let mut i = 0;
        while !nodes[i].is_leaf() {
            let (l, r) = (i + 1, nodes[i].offset as usize);
            let (wl, wr) = (child_weight(set, x, r2, l), child_weight(set, x, r2, r));
            if wl + wr <= 0.0 {
                return None;
            }
            i = if rng.random::<f64>() * (wl + wr) < wl { l } else { r };
        }
        let candidates: Vec<u32> = set
            .bvh
            .leaf_primitives(&nodes[i])
            .iter()
            .map(|&p| set.triangles[p as usize])
            .filter(|&t| self.triangle_box_reaches(t, x, r2))
            .collect();
        let total: f64 = candidates.iter().map(|&t| self.area(t)).sum();
        if total <= 0.0 {
            return None;
        }
        let mut target = rng.random::<f64>() * total;
        let mut t = candidates[candidates.len() - 1];
        for &c in &candidates {
            target -= self.area(c);
            if target < 0.0 {
                t = c;
                break;
            }
        }
        let sample = self.sample_on(t, uniform_barycentric(rng.random(), rng.random()));
        if (sample.position - x).length_squared() >= r2 {
            return None;
        }
        Some((sample, self.ball_sample_pdf(x, radius, filter, t)))
    }

    /// Area density with which [`Scene::sample_boundary_in_ball`] draws a
    /// point on `triangle`; zero when the triangle is not in `filter` or
    /// cannot be reached.
    pub fn ball_sample_pdf(&self, x: DVec3, radius: f64, filter: LabelSet, triangle: u32) -> f64 {
        let Some(set) = self.filtered[filter.slot()].as_ref() else {
            return 0.0;
        };
        let Ok(prim) = set.triangles.binary_search(&triangle) else {
            return 0.0;
        };
        let prim = prim as u32;
        let nodes = set.bvh.nodes();
        let r2 = radius * radius;
        if nodes.is_empty() || nodes[0].bounds.distance_squared(x) >= r2 {
            return 0.0;
        }
        let mut pdf = 1.0;
        let mut i = 0;
        while !nodes[i].is_leaf() {
            let (l, r) = (i + 1, nodes[i].offset as usize);
            let (wl, wr) = (child_weight(set, x, r2, l), child_weight(set, x, r2, r));
            let next = if set.bvh.subtree_contains(l, prim) { l } else { r };
            let w = if next == l { wl } else { wr };
            if w <= 0.0 {
                return 0.0;
            }
            pdf *= w / (wl + wr);
            i = next;
        }
        let mut total = 0.0;
        let mut found = false;
        for &p in set.bvh.leaf_primitives(&nodes[i]) {
            let t = set.triangles[p as usize];
            if self.triangle_box_reaches(t, x, r2) {
                total += self.area(t);
                found |= p == prim;
            }
        }
        if found {
            pdf / total
        } else {
            0.0
        }
    }

    fn triangle_box_reaches(&self, t: u32, x: DVec3, r2: f64) -> bool {
        Aabb::from_points(&self.triangle_vertices(t)).distance_squared(x) < r2
    }

    /// True if nothing blocks the open segment from `from` to `to`. Faces
    /// parallel to the segment do not block it, so a segment lying in a face
    /// plane stays visible despite rounding.
    pub fn visible(&self, from: DVec3, to: DVec3) -> bool {
        let d = to - from;
        let len = d.length();
        if len == 0.0 {
            return true;
        }
        let guard = self.ray_guard();
        if len <= 2.0 * guard {
            return true;
        }
        let dir = d / len;
        self.intersect_ray_where(from, dir, guard, len - guard, LabelSet::All, |t| {
            self.normals[t as usize].dot(dir).abs() > PARALLEL_TOLERANCE
        })
        .is_none()
    }

    /// Parity test along a fixed, slightly skewed direction.
    pub fn is_inside(&self, y: DVec3) -> bool {
        // irrational-looking direction so axis-aligned edges and vertices are not hit head-on
        let dir = DVec3::new(0.537_745_932, 0.621_254_781, 0.570_113_497).normalize();
        let set = self.filtered[LabelSet::All.slot()]
            .as_ref()
            .expect("scene has triangles");
        let nodes = set.bvh.nodes();
        let inv = dir.recip();
        let mut crossings = 0usize;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &nodes[i];
            if node.bounds.intersect_ray(y, inv, 0.0, f64::INFINITY).is_none() {
                continue;
            }
            if node.is_leaf() {
                for &p in set.bvh.leaf_primitives(node) {
                    let [a, b, c] = self.triangle_vertices(set.triangles[p as usize]);
                    if let Some((t, _)) = intersect_triangle(y, dir, a, b, c) {
                        if t > 0.0 {
                            crossings += 1;
                        }
                    }
                }
            } else {
                stack.push(i + 1);
                stack.push(node.offset as usize);
            }
        }
        crossings % 2 == 1
    }

    /// Draws `n` i.i.d. area-uniform points from the triangles of `filter`.
    pub fn sample_boundary_uniform(
        &self,
        filter: LabelSet,
        n: usize,
        seed: u64,
    ) -> Result<Vec<SurfaceSample>, GeometryError> {
        let set = self.filtered(filter)?;
        let total = *set.cumulative_area.last().unwrap();
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let target = rng.random::<f64>() * total;
                let k = set
                    .cumulative_area
                    .partition_point(|&c| c <= target)
                    .min(set.triangles.len() - 1);
                let bary = uniform_barycentric(rng.random(), rng.random());
                self.sample_on(set.triangles[k], bary)
            })
            .collect())
    }
}

/// Sampling weight of a BVH child: its area when its box reaches the ball.
fn child_weight(set: &FilteredSet, x: DVec3, r2: f64, node: usize) -> f64 {
    if set.bvh.nodes()[node].bounds.distance_squared(x) < r2 {
        set.node_area[node]
    } else {
        0.0
    }
}

/// Maps two uniforms to area-uniform barycentric coordinates.
pub fn uniform_barycentric(u1: f64, u2: f64) -> [f64; 3] {
    let su = u1.sqrt();
    let b0 = 1.0 - su;
    let b1 = u2 * su;
    [b0, b1, (1.0 - b0 - b1).max(0.0)]
}

fn check_watertight(triangles: &[[u32; 3]]) -> Result<(), GeometryError> {
    let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut open = 0;
    let mut nonmanifold = 0;
    let mut first = None;
    for (&e, &c) in &counts {
        if c != 2 {
            if c < 2 {
                open += 1;
            } else {
                nonmanifold += 1;
            }
            first = Some(first.map_or(e, |f: (u32, u32)| f.min(e)));
        }
    }
    match first {
        None => Ok(()),
        Some(first) => Err(GeometryError::NotWatertight {
            open_edges: open,
            nonmanifold_edges: nonmanifold,
            first,
        }),
    }
}

#[cfg(test)]
mod tests;
