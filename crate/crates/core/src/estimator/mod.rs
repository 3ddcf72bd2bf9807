//! Walk-on-stars estimator for the linearized mixed problem.
//!
//! Each step certifies a star radius, casts one direction, and either exits
//! through the sphere or hits the boundary. Reflecting hits add the flux
//! term `T · (G/P) · h` and scale the throughput by the reflectance
//! `ρ = 1 − μ ψ(u₀) G/P`. Walks end in the Dirichlet ε-shell, by throughput
//! extinction, or at the step budget.

mod bc;
mod robin;
mod walk;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::geometry::{Scene, SurfaceSample};

pub use bc::{
    BoundaryConditionSpec, Nonlinearity, PowerTerm, SurfaceField, SurfaceFn, VolumeFn,
    VolumeFnBox, DEFAULT_U_FLOOR,
};
pub use robin::{
    certified_star_radius, max_certified_radius, radius_is_certified, RobinBounds, StarRadius,
};
pub use walk::{estimate_at, estimate_interior, estimate_point, walk_once, WalkOutcome};

/// Frozen boundary values `u₀` used inside `ψ`.
pub trait FrozenProxy: Sync {
    fn value_at(&self, z: &SurfaceSample) -> f64;
}

/// A proxy that is the same constant everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ConstantProxy(pub f64);

impl FrozenProxy for ConstantProxy {
    fn value_at(&self, _: &SurfaceSample) -> f64 {
        self.0
    }
}

impl<F: Fn(DVec3) -> f64 + Sync> FrozenProxy for F {
    fn value_at(&self, z: &SurfaceSample) -> f64 {
        self(z.position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub walks: usize,
    pub epsilon_shell: f64,
    pub max_steps: usize,
    pub min_radius: f64,
    pub seed: u64,
    /// Below this throughput reflectance acts as a survival probability
    /// instead of a multiplier.
    pub roulette_threshold: f64,
}

impl EstimatorConfig {
    /// Defaults scaled to the scene: ε-shell and minimum radius 1e-3 × diagonal.
    pub fn for_scene(scene: &Scene) -> Self {
        let eps = 1e-3 * scene.diagonal();
        EstimatorConfig {
            walks: 64,
            epsilon_shell: eps,
            max_steps: 10_000,
            min_radius: eps,
            seed: 0,
            roulette_threshold: 0.1,
        }
    }

    pub fn with_walks(mut self, walks: usize) -> Self {
        self.walks = walks;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), String> {
        if self.walks < 1 {
            return Err("walks must be >= 1".into());
        }
        if !(self.epsilon_shell > 0.0 && self.epsilon_shell < scene.diagonal()) {
            return Err(format!(
                "epsilon must lie in (0, {}) (scene diagonal)",
                scene.diagonal()
            ));
        }
        if self.max_steps < 1 {
            return Err("max_steps must be >= 1".into());
        }
        if !(self.min_radius > 0.0) {
            return Err("min_radius must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.roulette_threshold) {
            return Err("roulette_threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Where a walk starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartPoint {
    Interior(DVec3),
    /// On the reflecting boundary; walks sample the inward hemisphere.
    Boundary(SurfaceSample),
}

impl StartPoint {
    pub fn position(&self) -> DVec3 {
        match self {
            StartPoint::Interior(p) => *p,
            StartPoint::Boundary(s) => s.position,
        }
    }
}

/// Per-point Monte Carlo summary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateStatistic {
    pub mean: f64,
    /// Unbiased sample variance of single walks.
    pub variance: f64,
    pub walks: usize,
    pub truncated: usize,
    pub clipped: usize,
    pub steps: usize,
}

impl EstimateStatistic {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.walks.max(1) as f64).sqrt()
    }
}

/// Everything a walk reads; all immutable during a batch.
#[derive(Clone, Copy)]
pub struct WalkContext<'a> {
    pub scene: &'a Scene,
    pub bounds: &'a RobinBounds,
    pub bc: &'a BoundaryConditionSpec,
    pub proxy: &'a dyn FrozenProxy,
    pub config: &'a EstimatorConfig,
}
