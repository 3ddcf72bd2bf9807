//! Center-sourced ball kernels for the 3-D Laplacian.
//!
//! For a ball `B(x, R)` with the source at its center, the Green's function
//! is `G(r) = (1/4π)(1/r − 1/R)` and the Poisson kernel seen from a boundary
//! point `z` with unit normal `n` is `P = cosθ / (4π r²)`, where `cosθ` is the
//! angle between `n` and `z − x`. Their ratio `r(R − r)/(R cosθ)` is all the
//! walk needs to weight flux and Robin absorption at a directional hit.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use glam::DVec3;
use rand::Rng;
use thiserror::Error;

/// Below this cosine the G/P ratio is treated as a grazing configuration.
pub const COS_FLOOR: f64 = 1e-4;

const TABLE_SIZE: usize = 1024;

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("Green's function is singular at r = 0")]
    Singular,
    #[error("grazing configuration: cos θ = {0:e} is below the floor")]
    Grazing(f64),
    #[error("radius r = {r} outside (0, R = {big_r}]")]
    OutOfBall { r: f64, big_r: f64 },
}

fn check_radius(r: f64, big_r: f64) -> Result<(), KernelError> {
    if r <= 0.0 {
        return Err(KernelError::Singular);
    }
    // tolerate roundoff when a hit lands exactly on the sphere
    if r > big_r * (1.0 + 1e-12) {
        return Err(KernelError::OutOfBall { r, big_r });
    }
    Ok(())
}

pub fn green_center(big_r: f64, r: f64) -> Result<f64, KernelError> {
    check_radius(r, big_r)?;
    Ok(((1.0 / r - 1.0 / big_r) / (4.0 * PI)).max(0.0))
}

/// Ratio `G/P` at a boundary point at distance `r` seen under `cos_theta`.
pub fn gp_ratio(r: f64, big_r: f64, cos_theta: f64) -> Result<f64, KernelError> {
    check_radius(r, big_r)?;
    let c = cos_theta.abs();
    if c <= COS_FLOOR {
        return Err(KernelError::Grazing(c));
    }
    Ok((r * (big_r - r)).max(0.0) / (big_r * c))
}

/// Unclipped reflectance `1 − μ_eff · G/P`.
pub fn reflectance(mu_eff: f64, gp: f64) -> f64 {
    1.0 - mu_eff * gp
}

/// Normalization of the center Green's function: `∫_B G dy = R²/6`.
pub fn green_volume(big_r: f64) -> f64 {
    big_r * big_r / 6.0
}

/// Maps two uniforms to a uniform direction on the unit sphere.
pub fn uniform_sphere(u1: f64, u2: f64) -> DVec3 {
    let z = 1.0 - 2.0 * u1;
    let s = (1.0 - z * z).max(0.0).sqrt();
    let phi = TAU * u2;
    DVec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Uniform direction on the hemisphere around unit `axis`.
pub fn uniform_hemisphere(axis: DVec3, u1: f64, u2: f64) -> DVec3 {
    let local = uniform_sphere(0.5 * u1, u2); // z in [0, 1]
    let (t, b) = axis.any_orthonormal_pair();
    local.x * t + local.y * b + local.z * axis
}

/// Inverse of the radial CDF `F(s) = 3s² − 2s³` (`s = r/R`) sampled on a
/// uniform grid in `u`. Entries come from bisection, independent of the
/// closed-form cubic root used by the tests.
fn radial_table() -> &'static [f64; TABLE_SIZE] {
    static TABLE: OnceLock<[f64; TABLE_SIZE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_SIZE];
        for (k, slot) in t.iter_mut().enumerate() {
            let u = k as f64 / (TABLE_SIZE - 1) as f64;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if 3.0 * mid * mid - 2.0 * mid * mid * mid < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *slot = 0.5 * (lo + hi);
        }
        t
    })
}

/// `s = r/R` for a uniform `u`, by linear interpolation in the table.
pub fn radial_inverse_cdf(u: f64) -> f64 {
    let t = radial_table();
    let x = u.clamp(0.0, 1.0) * (TABLE_SIZE - 1) as f64;
    let k = (x as usize).min(TABLE_SIZE - 2);
    let w = x - k as f64;
    t[k] + w * (t[k + 1] - t[k])
}

/// Draws `y − x` with density `G(|y − x|) / (R²/6)` inside the ball and
/// returns it with the normalization `R²/6`.
pub fn sample_green_volume<R: Rng + ?Sized>(big_r: f64, rng: &mut R) -> (DVec3, f64) {
    let s = radial_inverse_cdf(rng.random());
    let dir = uniform_sphere(rng.random(), rng.random());
    (s * big_r * dir, green_volume(big_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    /// Closed-form root of `3s² − 2s³ = u` on `[0, 1]`.
    fn cubic_inverse(u: f64) -> f64 {
        0.5 - ((1.0 - 2.0 * u).asin() / 3.0).sin()
    }

    #[test]
    fn green_values() {
        assert_eq!(green_center(1.0, 1.0).unwrap(), 0.0);
        assert!((green_center(1.0, 0.5).unwrap() - 0.079_577_471_545_947_67).abs() < 1e-15);
        assert_eq!(green_center(1.0, 0.0), Err(KernelError::Singular));
        let mut prev = f64::INFINITY;
        for k in 1..=100 {
            let g = green_center(2.0, 0.02 * k as f64).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn gp_values() {
        assert_eq!(gp_ratio(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((gp_ratio(0.5, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((gp_ratio(0.5, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(gp_ratio(0.5, 1.0, 5e-5), Err(KernelError::Grazing(_))));
    }

    #[test]
    fn gp_is_ratio_of_closed_forms() {
        for &(r, big_r, c) in &[(0.3, 1.0, 0.7), (1.5, 2.0, 0.2), (0.01, 0.5, 0.9)] {
            let p = c / (4.0 * PI * r * r);
            let expected = green_center(big_r, r).unwrap() / p;
            assert!((gp_ratio(r, big_r, c).unwrap() - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn gp_peaks_at_half_radius() {
        let big_r = 1.7;
        let (best, _) = (1..1000)
            .map(|k| {
                let r = big_r * k as f64 / 1000.0;
                (r, gp_ratio(r, big_r, 0.3).unwrap())
            })
            .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best - big_r / 2.0).abs() <= big_r / 1000.0);
    }

    #[test]
    fn reflectance_values() {
        assert_eq!(reflectance(0.0, 3.0), 1.0);
        assert_eq!(reflectance(5.0, 0.0), 1.0);
        assert!((reflectance(2.0, 0.25) - 0.5).abs() < 1e-15);
        assert!(reflectance(1.0, 0.3) > reflectance(2.0, 0.3));
    }

    #[test]
    fn table_matches_closed_form_inverse() {
        let worst = (0..=10_000)
            .map(|k| {
                let u = k as f64 / 10_000.0;
                (radial_inverse_cdf(u) - cubic_inverse(u)).abs()
            })
            .fold(0.0, f64::max);
        // the square-root behaviour near u = 0 dominates the interpolation error
        assert!(worst < 5e-3, "{worst}");
        let mid = (0..=10_000)
            .map(|k| 0.05 + 0.9 * k as f64 / 10_000.0)
            .map(|u| (radial_inverse_cdf(u) - cubic_inverse(u)).abs())
            .fold(0.0, f64::max);
        assert!(mid < 1e-5, "{mid}");
    }

    #[test]
    fn uniform_ball_integral_of_green() {
        // plain uniform sampling of the ball, independent of the sampler
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let n = 1_000_000;
        let big_r = 1.0;
        let vol = 4.0 / 3.0 * PI;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = big_r * rng.random::<f64>().cbrt();
            sum += green_center(big_r, r.max(1e-300)).unwrap();
        }
        let est = vol * sum / n as f64;
        assert!((est - 1.0 / 6.0).abs() < 0.01 / 6.0, "{est}");
    }

    #[test]
    fn green_sampler_normalization_and_radial_law() {
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        let big_r = 2.5;
        let n = 200_000;
        let mut radii: Vec<f64> = Vec::with_capacity(n);
        let mut mean_dir = DVec3::ZERO;
        let mut norm_sum = 0.0;
        for _ in 0..n {
            let (off, norm) = sample_green_volume(big_r, &mut rng);
            norm_sum += norm;
            radii.push(off.length() / big_r);
            mean_dir += off.normalize();
        }
        assert!((norm_sum / n as f64 - big_r * big_r / 6.0).abs() < 1e-9);
        // one-sample Kolmogorov–Smirnov against the analytic CDF
        radii.sort_by(f64::total_cmp);
        let ks = radii
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let f = 3.0 * s * s - 2.0 * s * s * s;
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / (n as f64).sqrt(), "{ks}");
        // isotropy: each component has variance 1/3
        let bound = 4.0 * (1.0 / (3.0 * n as f64)).sqrt() * 3f64.sqrt();
        assert!((mean_dir / n as f64).length() < bound);
    }

    #[test]
    fn hemisphere_stays_on_its_side() {
        let mut rng = Pcg64Mcg::seed_from_u64(4);
        let axis = DVec3::new(0.3, -0.5, 0.8).normalize();
        let mut mean = 0.0;
        for _ in 0..10_000 {
            let d = uniform_hemisphere(axis, rng.random(), rng.random());
            assert!(d.dot(axis) >= 0.0 && (d.length() - 1.0).abs() < 1e-12);
            mean += d.dot(axis);
        }
        // E[cos] = 1/2 for the uniform hemisphere
        assert!((mean / 10_000.0 - 0.5).abs() < 0.015);
    }
}
