//! Boundary proxy: scattered samples of the current iterate, evaluated
//! anywhere by moving least squares, plus the per-triangle Robin bounds
//! derived from it and the CSV exchange format.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use glam::DVec3;
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::estimator::{BoundaryConditionSpec, FrozenProxy, RobinBounds};
use crate::geometry::{LabelSet, Scene, SurfaceSample};

/// Default relative margin applied to Robin coefficient bounds.
pub const DEFAULT_MARGIN: f64 = 0.2;
const MIN_FIT_NEIGHBORS: usize = 4;
/// Principal directions whose weighted spread is below this fraction of the
/// largest are treated as flat: the fit is constant along them.
const FLAT_RATIO: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("proxy needs at least one sample")]
    Empty,
    #[error("invalid proxy parameter: {0}")]
    Parameter(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {reason}")]
    Csv {
        path: String,
        line: u64,
        reason: String,
    },
}

/// One boundary sample. `triangle` is the triangle the point was drawn from,
/// when known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxySample {
    pub position: DVec3,
    pub value: f64,
    pub triangle: Option<u32>,
    pub sigma: Option<f64>,
}

impl ProxySample {
    pub fn new(position: DVec3, value: f64) -> Self {
        ProxySample {
            position,
            value,
            triangle: None,
            sigma: None,
        }
    }

    pub fn on(sample: &SurfaceSample, value: f64) -> Self {
        ProxySample {
            position: sample.position,
            value,
            triangle: Some(sample.triangle),
            sigma: None,
        }
    }
}

/// Neighborhood radius and Gaussian bandwidth; `None` picks the defaults
/// (radius 3 × mean nearest-neighbor spacing, bandwidth radius / 2).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MlsParams {
    pub radius: Option<f64>,
    pub bandwidth: Option<f64>,
}

pub struct ProxyField {
    samples: Vec<ProxySample>,
    radius: f64,
    bandwidth: f64,
    tree: ImmutableKdTree<f64, 3>,
}

impl std::fmt::Debug for ProxyField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProxyField")
            .field("samples", &self.samples.len())
            .field("radius", &self.radius)
            .field("bandwidth", &self.bandwidth)
            .finish()
    }
}

impl Clone for ProxyField {
    fn clone(&self) -> Self {
        ProxyField::build(
            self.samples.clone(),
            MlsParams {
                radius: Some(self.radius),
                bandwidth: Some(self.bandwidth),
            },
        )
        .expect("a built field rebuilds")
    }
}

fn kd_tree(samples: &[ProxySample]) -> ImmutableKdTree<f64, 3> {
    let points: Vec<[f64; 3]> = samples.iter().map(|s| s.position.to_array()).collect();
    ImmutableKdTree::new_from_slice(&points).expect("finite sample positions")
}

/// Mean distance from each sample to its nearest other sample.
pub fn mean_spacing(positions: &[DVec3]) -> Option<f64> {
    if positions.len() < 2 {
        return None;
    }
    let points: Vec<[f64; 3]> = positions.iter().map(|p| p.to_array()).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&points).ok()?;
    let two = std::num::NonZero::new(2usize).unwrap();
    let mut gaps: Vec<f64> = points
        .iter()
        .map(|p| {
            let hits = tree.query(p).nearest_n::<SquaredEuclidean<f64>>(two).execute();
            hits.iter().map(|h| h.distance).fold(0.0, f64::max).sqrt()
        })
        .collect();
    // summing in sorted order keeps the result independent of input order
    gaps.sort_unstable_by(f64::total_cmp);
    Some(gaps.iter().sum::<f64>() / positions.len() as f64)
}

impl ProxyField {
    /// Builds the field; negative values are clamped to zero on ingestion.
    pub fn build(mut samples: Vec<ProxySample>, params: MlsParams) -> Result<Self, FieldError> {
        if samples.is_empty() {
            return Err(FieldError::Empty);
        }
        if let Some(bad) = samples
            .iter()
            .position(|s| !s.position.is_finite() || !s.value.is_finite())
        {
            return Err(FieldError::Parameter(format!("sample {bad} is not finite")));
        }
        for s in &mut samples {
            s.value = s.value.max(0.0);
        }
        let radius = match params.radius {
            Some(r) => r,
            None => {
                let positions: Vec<DVec3> = samples.iter().map(|s| s.position).collect();
                match mean_spacing(&positions) {
                    Some(h) if h > 0.0 => 3.0 * h,
                    _ => 1.0,
                }
            }
        };
        let bandwidth = params.bandwidth.unwrap_or(0.5 * radius);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(FieldError::Parameter(format!("radius {radius} must be > 0")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(FieldError::Parameter(format!("bandwidth {bandwidth} must be > 0")));
        }
        let tree = kd_tree(&samples);
        Ok(ProxyField {
            samples,
            radius,
            bandwidth,
            tree,
        })
    }

    /// A field with the same value at every sample.
    pub fn constant(points: &[SurfaceSample], value: f64, params: MlsParams) -> Result<Self, FieldError> {
        Self::build(points.iter().map(|p| ProxySample::on(p, value)).collect(), params)
    }

    pub fn samples(&self) -> &[ProxySample] {
        &self.samples
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Neighbors within the radius, in a canonical order independent of the
    /// order samples were given in.
    fn neighbors(&self, x: DVec3) -> Vec<(DVec3, f64)> {
        let mut out: Vec<(DVec3, f64)> = self
            .tree
            .query(&x.to_array())
            .within::<SquaredEuclidean<f64>>(self.radius * self.radius)
            .unsorted()
            .execute()
            .into_iter()
            .map(|h| {
                let s = &self.samples[h.item as usize];
                (s.position, s.value)
            })
            .collect();
        out.sort_unstable_by(|a, b| {
            let key = |p: &(DVec3, f64)| {
                (p.0.x.to_bits(), p.0.y.to_bits(), p.0.z.to_bits(), p.1.to_bits())
            };
            key(a).cmp(&key(b))
        });
        out
    }

    /// Moving least squares with a linear basis and Gaussian weights.
    pub fn eval_mls(&self, x: DVec3) -> f64 {
        let nb = self.neighbors(x);
        match nb.len() {
            0 => {
                let hit = self
                    .tree
                    .query(&x.to_array())
                    .nearest_one::<SquaredEuclidean<f64>>()
                    .execute();
                self.samples[hit.item as usize].value
            }
            n if n < MIN_FIT_NEIGHBORS => nb.iter().map(|p| p.1).sum::<f64>() / n as f64,
            _ => self.fit(x, &nb).max(0.0),
        }
    }

    /// Weighted linear fit in the principal axes of the neighborhood,
    /// centered on the weighted centroid. In that basis the slopes decouple,
    /// and directions with (nearly) no spread, such as the normal of a
    /// surface patch, get slope zero instead of an extrapolation.
    fn fit(&self, x: DVec3, nb: &[(DVec3, f64)]) -> f64 {
        let inv_r = 1.0 / self.radius;
        let inv_h2 = 1.0 / (self.bandwidth * self.bandwidth);
        let weights: Vec<f64> = nb
            .iter()
            .map(|(p, _)| (-(*p - x).length_squared() * inv_h2).exp())
            .collect();
        let wsum: f64 = weights.iter().sum();
        if !(wsum > 0.0) {
            return nb.iter().map(|p| p.1).sum::<f64>() / nb.len() as f64;
        }
        let mut centroid = DVec3::ZERO;
        let mut mean = 0.0;
        for (&(p, v), &w) in nb.iter().zip(&weights) {
            centroid += w * (p - x) * inv_r;
            mean += w * v;
        }
        centroid /= wsum;
        mean /= wsum;
        let mut cov = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for (&(p, v), &w) in nb.iter().zip(&weights) {
            let b = (p - x) * inv_r - centroid;
            let b = Vector3::new(b.x, b.y, b.z);
            cov += w * b * b.transpose();
            rhs += w * (v - mean) * b;
        }
        let eig = SymmetricEigen::new(cov);
        let largest = eig.eigenvalues.max();
        // x sits at the origin of the scaled coordinates
        let to_x = -Vector3::new(centroid.x, centroid.y, centroid.z);
        let mut value = mean;
        for k in 0..3 {
            let lambda = eig.eigenvalues[k];
            if lambda > FLAT_RATIO * largest && lambda > 0.0 {
                let e = eig.eigenvectors.column(k);
                value += e.dot(&rhs) / lambda * e.dot(&to_x);
            }
        }
        value
    }

    /// Writes `x,y,z,value[,sigma]` with shortest round-trip float formatting.
    pub fn write_csv(&self, path: &Path) -> Result<(), FieldError> {
        write_samples_csv(path, &self.samples)
    }

    /// Assigns each sample the nearest reflecting triangle as its home.
    pub fn assign_homes(&mut self, scene: &Scene) {
        for s in &mut self.samples {
            if s.triangle.is_none() {
                s.triangle = scene
                    .closest_point(s.position, LabelSet::Reflecting)
                    .ok()
                    .map(|(hit, _)| hit.triangle);
            }
        }
    }
}

impl FrozenProxy for ProxyField {
    fn value_at(&self, z: &SurfaceSample) -> f64 {
        self.eval_mls(z.position)
    }
}

/// Per reflecting triangle, the range of `μ ψ(u)` over its vertices and home
/// samples, widened by `margin` (`hi·(1+m)`, `lo·(1−m)`, `lo ≥ 0`).
pub fn triangle_coefficient_bounds(
    field: &ProxyField,
    scene: &Scene,
    bc: &BoundaryConditionSpec,
    margin: f64,
) -> RobinBounds {
    let Ok(tris) = scene.filter_triangles(LabelSet::Reflecting) else {
        return RobinBounds::zero(scene);
    };
    if bc.is_neumann() {
        return RobinBounds::zero(scene);
    }
    // proxy values at every vertex touched by a reflecting triangle
    let mut used = vec![false; scene.vertices().len()];
    for &t in tris {
        for v in scene.triangles()[t as usize] {
            used[v as usize] = true;
        }
    }
    let vertex_values: Vec<f64> = scene
        .vertices()
        .par_iter()
        .zip(used.par_iter())
        .map(|(&p, &u)| if u { field.eval_mls(p) } else { 0.0 })
        .collect();
    let mut homes: Vec<Vec<usize>> = vec![Vec::new(); scene.triangle_count()];
    for (i, s) in field.samples().iter().enumerate() {
        if let Some(t) = s.triangle {
            if (t as usize) < homes.len() {
                homes[t as usize].push(i);
            }
        }
    }
    let mut intervals = vec![[0.0, 0.0]; scene.triangle_count()];
    let computed: Vec<(u32, [f64; 2])> = tris
        .par_iter()
        .map(|&t| {
            let tri = scene.triangles()[t as usize];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut take = |s: SurfaceSample, u: f64| {
                let m = bc.mu_eff(&s, u);
                lo = lo.min(m);
                hi = hi.max(m);
            };
            for (k, &v) in tri.iter().enumerate() {
                let mut bary = [0.0; 3];
                bary[k] = 1.0;
                take(scene.sample_on(t, bary), vertex_values[v as usize]);
            }
            for &i in &homes[t as usize] {
                let s = &field.samples()[i];
                let (q, bary) = {
                    let [a, b, c] = scene.triangle_vertices(t);
                    crate::geometry::closest_point_on_triangle(s.position, a, b, c)
                };
                let sample = SurfaceSample {
                    position: q,
                    normal: scene.normal(t),
                    triangle: t,
                    barycentric: bary,
                };
                take(sample, field.eval_mls(s.position));
            }
            (t, [(lo * (1.0 - margin)).max(0.0), hi * (1.0 + margin)])
        })
        .collect();
    for (t, iv) in computed {
        intervals[t as usize] = iv;
    }
    RobinBounds::from_intervals(scene, intervals)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> FieldError + '_ {
    move |source| FieldError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes samples in the exchange format. The sigma column is present when
/// every sample carries one.
pub fn write_samples_csv(path: &Path, samples: &[ProxySample]) -> Result<(), FieldError> {
    let with_sigma = !samples.is_empty() && samples.iter().all(|s| s.sigma.is_some());
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err(path))?);
    let header = if with_sigma { "x,y,z,value,sigma" } else { "x,y,z,value" };
    writeln!(out, "{header}").map_err(io_err(path))?;
    for s in samples {
        let p = s.position;
        if with_sigma {
            writeln!(out, "{},{},{},{},{}", p.x, p.y, p.z, s.value, s.sigma.unwrap())
        } else {
            writeln!(out, "{},{},{},{}", p.x, p.y, p.z, s.value)
        }
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads `x,y,z,value[,sigma]` rows. Header names are checked; errors carry
/// the 1-based line number.
pub fn read_samples_csv(path: &Path) -> Result<Vec<ProxySample>, FieldError> {
    let file = File::open(path).map_err(io_err(path))?;
    let csv_err = |line: u64, reason: String| FieldError::Csv {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_sigma = match names.as_slice() {
        ["x", "y", "z", "value"] => false,
        ["x", "y", "z", "value", "sigma"] => true,
        _ => {
            return Err(csv_err(
                1,
                format!("expected header x,y,z,value[,sigma], got {}", names.join(",")),
            ))
        }
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64, FieldError> {
            let s = record.get(k).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| csv_err(line, format!("column {} is not a number: {s:?}", names[k])))
        };
        out.push(ProxySample {
            position: DVec3::new(field(0)?, field(1)?, field(2)?),
            value: field(3)?,
            triangle: None,
            sigma: if with_sigma { Some(field(4)?) } else { None },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{Nonlinearity, SurfaceField};
    use crate::geometry::shapes::icosphere;
    use crate::geometry::{BoundaryLabel, LabelRule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64Mcg;

    fn random_samples(n: usize, seed: u64, f: impl Fn(DVec3) -> f64) -> Vec<ProxySample> {
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let p = DVec3::new(rng.random(), rng.random(), rng.random());
                ProxySample::new(p, f(p))
            })
            .collect()
    }

    #[test]
    fn constant_values_are_stored_and_reproduced() {
        let field = ProxyField::build(random_samples(100, 1, |_| 7.0), MlsParams::default()).unwrap();
        assert!(field.samples().iter().all(|s| s.value == 7.0));
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        for _ in 0..200 {
            let x = DVec3::new(rng.random(), rng.random(), rng.random()) * 1.4 - 0.2;
            assert!((field.eval_mls(x) - 7.0).abs() < 1e-12, "{x} {} r={}", field.eval_mls(x), field.radius());
        }
    }

    #[test]
    fn negative_values_clamp_at_ingestion() {
        let mut s = random_samples(10, 1, |_| 1.0);
        s[3].value = -2.0;
        let field = ProxyField::build(s, MlsParams::default()).unwrap();
        assert_eq!(field.samples()[3].value, 0.0);
        assert!(matches!(ProxyField::build(vec![], MlsParams::default()), Err(FieldError::Empty)));
    }

    #[test]
    fn few_neighbors_fall_back_to_average() {
        let samples = vec![
            ProxySample::new(DVec3::new(0.0, 0.0, 0.0), 1.0),
            ProxySample::new(DVec3::new(0.1, 0.0, 0.0), 2.0),
            ProxySample::new(DVec3::new(0.0, 0.1, 0.0), 3.0),
            ProxySample::new(DVec3::new(5.0, 5.0, 5.0), 9.0),
        ];
        let field = ProxyField::build(
            samples,
            MlsParams {
                radius: Some(0.5),
                bandwidth: None,
            },
        )
        .unwrap();
        assert!((field.eval_mls(DVec3::new(0.03, 0.03, 0.0)) - 2.0).abs() < 1e-15);
        // far from everything: nearest sample
        assert_eq!(field.eval_mls(DVec3::new(4.0, 4.0, 4.0)), 9.0);
    }

    #[test]
    fn affine_field_on_a_plane_is_exact() {
        let (a, b) = (3.0, DVec3::new(0.5, -1.25, 0.0));
        let mut rng = Pcg64Mcg::seed_from_u64(4);
        let samples: Vec<ProxySample> = (0..400)
            .map(|_| {
                let p = DVec3::new(rng.random(), rng.random(), 0.25);
                ProxySample::new(p, a + b.dot(p))
            })
            .collect();
        let field = ProxyField::build(samples, MlsParams { radius: Some(0.15), bandwidth: None }).unwrap();
        for _ in 0..100 {
            let x = DVec3::new(rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), 0.25);
            assert!((field.eval_mls(x) - (a + b.dot(x))).abs() < 1e-9, "{x} {} {}", field.eval_mls(x), a + b.dot(x));
        }
    }

    #[test]
    fn affine_field_in_volume_is_exact() {
        let f = |p: DVec3| 2.0 + p.dot(DVec3::new(1.0, 2.0, -0.5));
        let field = ProxyField::build(random_samples(2000, 5, f), MlsParams::default()).unwrap();
        let x = DVec3::splat(0.5);
        assert!((field.eval_mls(x) - f(x)).abs() < 1e-9);
    }

    #[test]
    fn rebuild_gives_identical_answers() {
        let s = random_samples(300, 6, |p| p.x.sin() + p.y * p.z);
        let f1 = ProxyField::build(s.clone(), MlsParams::default()).unwrap();
        let f2 = ProxyField::build(s, MlsParams::default()).unwrap();
        let x = DVec3::new(0.3, 0.6, 0.1);
        assert_eq!(f1.eval_mls(x).to_bits(), f2.eval_mls(x).to_bits());
    }

    #[test]
    fn curved_patch_does_not_extrapolate_along_the_normal() {
        // samples on a unit sphere carrying a constant; query points off the
        // surface still see the constant
        let mut rng = Pcg64Mcg::seed_from_u64(9);
        let samples: Vec<ProxySample> = (0..2000)
            .map(|_| {
                let p = crate::kernels::uniform_sphere(rng.random(), rng.random());
                ProxySample::new(p, 10.0 + 1e-3 * rng.random::<f64>())
            })
            .collect();
        let field = ProxyField::build(samples, MlsParams::default()).unwrap();
        for _ in 0..100 {
            let d = crate::kernels::uniform_sphere(rng.random(), rng.random());
            for scale in [0.97, 1.0, 1.03] {
                let v = field.eval_mls(scale * d);
                assert!((v - 10.0).abs() < 2e-3, "{v} at {scale}");
            }
        }
    }

    fn sphere_scene() -> Scene {
        Scene::from_mesh(
            icosphere(DVec3::ZERO, 1.0, 3),
            &LabelRule::Uniform(BoundaryLabel::Reflecting),
        )
        .unwrap()
    }

    #[test]
    fn bounds_examples() {
        let scene = sphere_scene();
        let pts = scene.sample_boundary_uniform(LabelSet::Reflecting, 500, 1).unwrap();
        let field = ProxyField::constant(&pts, 2.0, MlsParams::default()).unwrap();
        let bc = BoundaryConditionSpec::dirichlet(SurfaceField::Constant(0.0))
            .with_robin(SurfaceField::Constant(0.5), Nonlinearity::quartic(1.0));
        let b = triangle_coefficient_bounds(&field, &scene, &bc, 0.0);
        for iv in b.intervals() {
            assert!((iv[0] - 4.0).abs() < 1e-12 && (iv[1] - 4.0).abs() < 1e-12);
        }
        let b = triangle_coefficient_bounds(&field, &scene, &bc, 0.2);
        assert!((b.intervals()[0][0] - 3.2).abs() < 1e-12 && (b.intervals()[0][1] - 4.8).abs() < 1e-12);
        let neumann = bc.clone().with_robin(SurfaceField::Constant(0.0), Nonlinearity::quartic(1.0));
        let b = triangle_coefficient_bounds(&field, &scene, &neumann, 0.2);
        assert!(b.intervals().iter().all(|iv| *iv == [0.0, 0.0]));
        assert_eq!(b.global_max(), 0.0);
    }

    #[test]
    fn margin_expands_raw_interval() {
        // two samples on one triangle with μψ = u for the linear law
        let scene = sphere_scene();
        let t = 0u32;
        let [a, b, c] = scene.triangle_vertices(t);
        let samples = vec![
            ProxySample { position: a, value: 1.0, triangle: Some(t), sigma: None },
            ProxySample { position: b, value: 2.0, triangle: Some(t), sigma: None },
            ProxySample { position: c, value: 1.5, triangle: Some(t), sigma: None },
        ];
        let field = ProxyField::build(samples, MlsParams { radius: Some(1e-6), bandwidth: None }).unwrap();
        // μ(z)·ψ with ψ ≡ 1 and μ taken from the proxy value at z
        let f2 = field.clone();
        let bc = BoundaryConditionSpec::dirichlet(SurfaceField::Constant(0.0))
            .with_robin(SurfaceField::func(move |s| f2.eval_mls(s.position)), Nonlinearity::linear());
        let iv = triangle_coefficient_bounds(&field, &scene, &bc, 0.2).interval(t);
        assert!((iv[0] - 0.8).abs() < 1e-12 && (iv[1] - 2.4).abs() < 1e-12, "{iv:?}");
    }

    #[test]
    fn bounds_contain_interior_values() {
        let scene = sphere_scene();
        let pts = scene.sample_boundary_uniform(LabelSet::Reflecting, 3000, 7).unwrap();
        let mut rng = Pcg64Mcg::seed_from_u64(8);
        let samples: Vec<ProxySample> = pts
            .iter()
            .map(|p| {
                let smooth = 10.0 + p.position.x + 0.5 * (3.0 * p.position.y).sin();
                ProxySample::on(p, smooth + 0.05 * (rng.random::<f64>() - 0.5))
            })
            .collect();
        let field = ProxyField::build(samples, MlsParams::default()).unwrap();
        let bc = BoundaryConditionSpec::dirichlet(SurfaceField::Constant(0.0))
            .with_robin(SurfaceField::Constant(1e-3), Nonlinearity::quartic(1.0));
        let bounds = triangle_coefficient_bounds(&field, &scene, &bc, DEFAULT_MARGIN);
        let (mut inside, mut total) = (0usize, 0usize);
        for t in (0..scene.triangle_count() as u32).step_by(7) {
            let iv = bounds.interval(t);
            for _ in 0..100 {
                let bary = crate::geometry::uniform_barycentric(rng.random(), rng.random());
                let s = scene.sample_on(t, bary);
                let m = bc.mu_eff(&s, field.eval_mls(s.position));
                inside += (iv[0] <= m && m <= iv[1]) as usize;
                total += 1;
            }
        }
        assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        let mut s = random_samples(50, 9, |p| p.x / 3.0);
        write_samples_csv(&path, &s).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(back.len(), 50);
        for (a, b) in s.iter().zip(&back) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
        for (k, x) in s.iter_mut().enumerate() {
            x.sigma = Some(k as f64 * 0.1);
        }
        write_samples_csv(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,z,value,sigma\n"));
        assert_eq!(read_samples_csv(&path).unwrap()[7].sigma, Some(0.7000000000000001));
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,y,z,value\n1,2,3,4\n1,2,oops,4\n").unwrap();
        match read_samples_csv(&path) {
            Err(FieldError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(FieldError::Csv { line: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn permutation_invariance(seed in 0u64..1000, q in prop::array::uniform3(0.0f64..1.0)) {
            let s = random_samples(200, seed, |p| (4.0 * p.x).cos() + p.y);
            let mut shuffled = s.clone();
            let mut rng = Pcg64Mcg::seed_from_u64(seed + 1);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let a = ProxyField::build(s, MlsParams::default()).unwrap();
            let b = ProxyField::build(shuffled, MlsParams::default()).unwrap();
            let x = DVec3::from_array(q);
            prop_assert_eq!(a.eval_mls(x).to_bits(), b.eval_mls(x).to_bits());
        }
    }
}
