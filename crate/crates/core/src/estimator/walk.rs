use std::f64::consts::PI;

use glam::DVec3;
use rand::Rng;
use rayon::prelude::*;

use super::robin::certified_star_radius;
use super::{EstimateStatistic, StartPoint, WalkContext};
use crate::geometry::{BallHit, BoundaryLabel, LabelSet, SurfaceSample};
use crate::kernels::{self, COS_FLOOR};
use crate::rng::walk_rng;

/// Result of one walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkOutcome {
    pub value: f64,
    /// The step budget ran out; the remaining throughput contributed zero.
    pub truncated: bool,
    /// A reflectance had to be clipped into `[0, 1]` because certification
    /// failed at the minimum radius.
    pub clipped: bool,
    pub steps: usize,
}

/// One sample of the linearized solution at `start`.
pub fn walk_once<R: Rng + ?Sized>(ctx: &WalkContext<'_>, start: &StartPoint, rng: &mut R) -> WalkOutcome {
    let scene = ctx.scene;
    let cfg = ctx.config;
    let bc = ctx.bc;
    let has_dirichlet = scene.has_label(BoundaryLabel::Dirichlet);
    let has_flux = bc.flux.as_constant() != Some(0.0) && scene.has_label(BoundaryLabel::Reflecting);
    let (mut x, mut normal) = match start {
        StartPoint::Interior(p) => (*p, None),
        StartPoint::Boundary(s) => (s.position, Some(s.normal)),
    };
    let mut throughput = 1.0;
    let mut acc = 0.0;
    let mut clipped = false;

    for step in 0..cfg.max_steps {
        let dirichlet_distance = if has_dirichlet {
            let (s, d) = scene
                .closest_point(x, LabelSet::Dirichlet)
                .expect("scene has Dirichlet triangles");
            if d <= cfg.epsilon_shell {
                return WalkOutcome {
                    value: acc + throughput * bc.dirichlet.eval(&s),
                    truncated: false,
                    clipped,
                    steps: step + 1,
                };
            }
            d
        } else {
            f64::INFINITY
        };

        let star = certified_star_radius(scene, ctx.bounds, x, dirichlet_distance, cfg.min_radius);
        clipped |= star.clamped;
        let mut radius = star.radius;

        // directional sample; grazing hits shrink the ball and resample
        let (dir, hit) = loop {
            let dir = match normal {
                Some(n) => kernels::uniform_hemisphere(-n, rng.random(), rng.random()),
                None => kernels::uniform_sphere(rng.random(), rng.random()),
            };
            let hit = scene.first_hit_in_ball(x, dir, radius, normal.is_some());
            if let BallHit::Boundary { sample, .. } = &hit {
                if sample.normal.dot(dir).abs() <= COS_FLOOR && radius > cfg.min_radius {
                    radius = (0.5 * radius).max(cfg.min_radius);
                    continue;
                }
            }
            break (dir, hit);
        };

        if has_flux {
            acc += throughput * flux_area_sample(ctx, x, normal, radius, rng);
        }

        if bc.source.is_some() {
            let (offset, norm) = kernels::sample_green_volume(radius, rng);
            let y = x + offset;
            // on the boundary only half the ball lies in the domain; the
            // factor 2 undoes the halved boundary integral
            let (inside, weight) = match normal {
                Some(n) => (offset.dot(n) < 0.0 && scene.visible(x, y), 2.0),
                None => (scene.visible(x, y), 1.0),
            };
            if inside {
                acc += throughput * weight * norm * bc.source_at(y);
            }
        }

        match hit {
            BallHit::SphereExit { point } => {
                x = point;
                normal = None;
            }
            BallHit::Boundary { sample, distance } => {
                if scene.label(sample.triangle) == BoundaryLabel::Dirichlet {
                    return WalkOutcome {
                        value: acc + throughput * bc.dirichlet.eval(&sample),
                        truncated: false,
                        clipped,
                        steps: step + 1,
                    };
                }
                let cos = sample.normal.dot(dir).abs().max(COS_FLOOR * (1.0 + 1e-12));
                let gp = kernels::gp_ratio(distance.min(radius), radius, cos).unwrap_or(0.0);
                if has_flux {
                    acc += throughput * flux_ray_sample(ctx, x, normal.is_some(), radius, &sample, distance, cos);
                }
                let mu = frozen_mu(ctx, &sample);
                let mut rho = kernels::reflectance(mu, gp);
                if !(0.0..=1.0).contains(&rho) {
                    clipped = true;
                    rho = rho.clamp(0.0, 1.0);
                }
                if throughput > cfg.roulette_threshold {
                    throughput *= rho;
                } else if rng.random::<f64>() >= rho {
                    return WalkOutcome {
                        value: acc,
                        truncated: false,
                        clipped,
                        steps: step + 1,
                    };
                }
                if throughput == 0.0 {
                    return WalkOutcome {
                        value: acc,
                        truncated: false,
                        clipped,
                        steps: step + 1,
                    };
                }
                x = sample.position;
                normal = Some(sample.normal);
            }
        }
    }
    WalkOutcome {
        value: acc,
        truncated: true,
        clipped,
        steps: cfg.max_steps,
    }
}

/// Solid-angle density of the walk direction: uniform over the sphere, or
/// over the inward hemisphere on the boundary.
fn direction_density(on_boundary: bool) -> f64 {
    if on_boundary {
        1.0 / (2.0 * PI)
    } else {
        1.0 / (4.0 * PI)
    }
}

/// The flux integral `∫ w G h` over the reflecting boundary inside the star
/// (`w = 2` on the boundary, matching the halved solid angle) gets two
/// samples combined with the balance heuristic: one drawn by area, one being
/// the walk's own ray hit. Area sampling reaches the walker's own plane,
/// which rays never hit; rays keep near, steeply seen faces cheap. On Robin
/// faces the own plane is skipped since the reflectance cannot see it
/// either, so `h` and `μu` are dropped together there.
fn flux_area_sample<R: Rng + ?Sized>(
    ctx: &WalkContext<'_>,
    x: DVec3,
    normal: Option<DVec3>,
    radius: f64,
    rng: &mut R,
) -> f64 {
    let Some((z, pdf_area)) = ctx.scene.sample_boundary_in_ball(x, radius, LabelSet::Reflecting, rng) else {
        return 0.0;
    };
    let d = z.position - x;
    let r = d.length();
    if r == 0.0 {
        return 0.0;
    }
    let mut pdf_ray = direction_density(normal.is_some()) * z.normal.dot(d).abs() / (r * r * r);
    if let Some(n) = normal {
        let side = n.dot(d);
        if side.abs() <= COS_FLOOR * r {
            if ctx.bc.robin.eval(&z) != 0.0 {
                return 0.0;
            }
            pdf_ray = 0.0;
        } else if side > 0.0 {
            return 0.0;
        }
    }
    if !ctx.scene.visible(x, z.position) {
        return 0.0;
    }
    flux_integrand(ctx, &z, normal.is_some(), radius, r) / (pdf_area + pdf_ray)
}

/// Ray-hit half of the flux estimate, for a reflecting hit at `distance`.
fn flux_ray_sample(ctx: &WalkContext<'_>, x: DVec3, on_boundary: bool, radius: f64, z: &SurfaceSample, distance: f64, cos: f64) -> f64 {
    if distance >= radius {
        return 0.0;
    }
    let pdf_ray = direction_density(on_boundary) * cos / (distance * distance);
    let pdf_area = ctx.scene.ball_sample_pdf(x, radius, LabelSet::Reflecting, z.triangle);
    flux_integrand(ctx, z, on_boundary, radius, distance) / (pdf_area + pdf_ray)
}

fn flux_integrand(ctx: &WalkContext<'_>, z: &SurfaceSample, on_boundary: bool, radius: f64, r: f64) -> f64 {
    let g = kernels::green_center(radius, r).unwrap_or(0.0);
    let weight = if on_boundary { 2.0 } else { 1.0 };
    weight * g * ctx.bc.flux.eval(z)
}

#[inline]
fn frozen_mu(ctx: &WalkContext<'_>, z: &SurfaceSample) -> f64 {
    let mu = ctx.bc.robin.eval(z);
    if mu == 0.0 {
        return 0.0;
    }
    mu * ctx.bc.nonlinearity.freeze(ctx.proxy.value_at(z))
}

/// Runs `walks` independent walks at one point in a fixed order.
pub fn estimate_point(ctx: &WalkContext<'_>, start: &StartPoint, iteration: u64, index: u64) -> EstimateStatistic {
    let cfg = ctx.config;
    let mut stat = EstimateStatistic::default();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for j in 0..cfg.walks {
        let mut rng = walk_rng(cfg.seed, iteration, index, j as u64);
        let w = walk_once(ctx, start, &mut rng);
        let n = (j + 1) as f64;
        let delta = w.value - mean;
        mean += delta / n;
        m2 += delta * (w.value - mean);
        stat.truncated += w.truncated as usize;
        stat.clipped += w.clipped as usize;
        stat.steps += w.steps;
    }
    stat.mean = mean;
    stat.walks = cfg.walks;
    stat.variance = if cfg.walks > 1 {
        (m2 / (cfg.walks - 1) as f64).max(0.0)
    } else {
        0.0
    };
    stat
}

/// Estimates at every point, in parallel over points. The result depends only
/// on the inputs and the seed, never on the thread count.
pub fn estimate_at(ctx: &WalkContext<'_>, points: &[StartPoint], iteration: u64) -> Vec<EstimateStatistic> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| estimate_point(ctx, p, iteration, i as u64))
        .collect()
}

/// Convenience wrapper for interior points.
pub fn estimate_interior(ctx: &WalkContext<'_>, points: &[DVec3], iteration: u64) -> Vec<EstimateStatistic> {
    let starts: Vec<StartPoint> = points.iter().map(|&p| StartPoint::Interior(p)).collect();
    estimate_at(ctx, &starts, iteration)
}
