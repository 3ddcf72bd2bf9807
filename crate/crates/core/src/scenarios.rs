//! Problem generators: manufactured solutions with known answers, the
//! constant-solution radiative body, and a body heated by a directional
//! light in vacuum.

use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::estimator::{BoundaryConditionSpec, Nonlinearity, SurfaceField, VolumeFn};
use crate::geometry::{LabelSet, Scene, SurfaceSample};

/// Stefan–Boltzmann constant, W/(m²·K⁴).
pub const STEFAN_BOLTZMANN: f64 = 5.67e-8;

/// A boundary value problem plus what is known about its solution.
#[derive(Clone)]
pub struct Problem {
    pub bc: BoundaryConditionSpec,
    /// Exact solution, when known.
    pub reference: Option<VolumeFn>,
    /// Suggested constant starting proxy.
    pub initial_guess: f64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("bc", &self.bc)
            .field("reference", &self.reference.is_some())
            .field("initial_guess", &self.initial_guess)
            .finish()
    }
}

/// `u*(x) = 10 + cos(ωx) cos(ωy) cos(ωz)` with boundary term `γ Σ u^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedProblem {
    pub omega: f64,
    pub gamma: f64,
    /// Exponents of the nonlinearity, each with unit coefficient.
    pub powers: Vec<f64>,
}

impl ManufacturedProblem {
    pub fn new(omega: f64, gamma: f64) -> Self {
        ManufacturedProblem {
            omega,
            gamma,
            powers: vec![4.0],
        }
    }

    pub fn with_powers(mut self, powers: Vec<f64>) -> Self {
        self.powers = powers;
        self
    }

    fn ccc(&self, p: DVec3) -> f64 {
        let w = self.omega;
        (w * p.x).cos() * (w * p.y).cos() * (w * p.z).cos()
    }

    pub fn solution(&self, p: DVec3) -> f64 {
        10.0 + self.ccc(p)
    }

    pub fn gradient(&self, p: DVec3) -> DVec3 {
        let w = self.omega;
        let (sx, cx) = (w * p.x).sin_cos();
        let (sy, cy) = (w * p.y).sin_cos();
        let (sz, cz) = (w * p.z).sin_cos();
        -w * DVec3::new(sx * cy * cz, cx * sy * cz, cx * cy * sz)
    }

    /// `−Δu* = 3ω² cos cos cos`.
    pub fn source(&self, p: DVec3) -> f64 {
        3.0 * self.omega * self.omega * self.ccc(p)
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::new(self.powers.iter().map(|&p| (1.0, p)))
    }

    /// `∂u*/∂n + γ φ(u*)` with the facet normal of `s`.
    pub fn flux(&self, s: &SurfaceSample) -> f64 {
        self.gradient(s.position).dot(s.normal) + self.gamma * self.nonlinearity().eval(self.solution(s.position))
    }

    /// Boundary residual `∂u*/∂n + γ φ(u*) − h`; zero by construction.
    pub fn residual(&self, bc: &BoundaryConditionSpec, s: &SurfaceSample) -> f64 {
        let u = self.solution(s.position);
        self.gradient(s.position).dot(s.normal) + bc.robin.eval(s) * bc.nonlinearity.eval(u) - bc.flux.eval(s)
    }

    pub fn problem(&self) -> Problem {
        let (g, h, f, r) = (self.clone(), self.clone(), self.clone(), self.clone());
        let phi = self.nonlinearity();
        let bc = BoundaryConditionSpec::dirichlet(SurfaceField::func(move |s| g.solution(s.position)))
            .with_flux(SurfaceField::func(move |s| h.flux(s)))
            .with_robin(SurfaceField::Constant(self.gamma), phi);
        let bc = if self.omega != 0.0 {
            bc.with_source(move |y| f.source(y))
        } else {
            bc
        };
        Problem {
            bc,
            reference: Some(Arc::new(move |p| r.solution(p))),
            initial_guess: 8.0,
        }
    }
}

/// All-radiative body whose exact solution is the constant `value`:
/// `∂u/∂n + μ u^p = μ value^p`.
pub fn constant_problem(value: f64, mu: f64, power: f64) -> Problem {
    let bc = BoundaryConditionSpec::dirichlet(SurfaceField::Constant(value))
        .with_flux(SurfaceField::Constant(mu * value.powf(power)))
        .with_robin(SurfaceField::Constant(mu), Nonlinearity::new([(1.0, power)]));
    Problem {
        bc,
        reference: Some(Arc::new(move |_| value)),
        initial_guess: 0.8 * value,
    }
}

/// Direct irradiance `L₀ (ω₀·n)₊ V` at a boundary point, with `V` the
/// visibility of the light along `ω₀` (unit, pointing toward the light).
pub fn directional_flux(scene: &Scene, x: &SurfaceSample, l0: f64, omega0: DVec3) -> f64 {
    let cos = omega0.dot(x.normal);
    if cos <= 0.0 || l0 == 0.0 {
        return 0.0;
    }
    let blocked = scene
        .intersect_ray(x.position, omega0, scene.ray_guard(), f64::INFINITY, LabelSet::All)
        .is_some();
    if blocked {
        0.0
    } else {
        l0 * cos
    }
}

/// Temperature at which a sphere radiates what it absorbs when the absorbed
/// power is spread evenly: `(L₀ / (4 ε σ))^{1/4}`.
pub fn equilibrium_initial_guess(l0: f64, emissivity: f64) -> f64 {
    (l0 / (4.0 * emissivity * STEFAN_BOLTZMANN)).powf(0.25)
}

/// Upper bound for the hottest point: local radiative equilibrium under
/// normal incidence, `(L₀ / (ε σ))^{1/4}`.
pub fn subsolar_bound(l0: f64, emissivity: f64) -> f64 {
    (l0 / (emissivity * STEFAN_BOLTZMANN)).powf(0.25)
}

/// Conducting body in vacuum lit by a directional source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiativeVacuumProblem {
    #[serde(rename = "L0")]
    pub l0: f64,
    pub light_dir: [f64; 3],
    pub emissivity: f64,
    pub conductivity: f64,
}

impl RadiativeVacuumProblem {
    pub fn black_body(l0: f64, light_dir: DVec3) -> Self {
        RadiativeVacuumProblem {
            l0,
            light_dir: light_dir.to_array(),
            emissivity: 1.0,
            conductivity: 1.0,
        }
    }

    pub fn omega0(&self) -> DVec3 {
        DVec3::from_array(self.light_dir).normalize()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.emissivity > 0.0 && self.emissivity <= 1.0) {
            return Err(format!("emissivity {} must lie in (0, 1]", self.emissivity));
        }
        if !(self.l0 >= 0.0 && self.l0.is_finite()) {
            return Err(format!("L0 {} must be >= 0", self.l0));
        }
        if !(self.conductivity > 0.0) {
            return Err(format!("conductivity {} must be > 0", self.conductivity));
        }
        let d = DVec3::from_array(self.light_dir);
        if !(d.length() > 0.0 && d.is_finite()) {
            return Err("light_dir must be a nonzero vector".into());
        }
        Ok(())
    }

    /// `μ = εσ/k`, `h = flux / k`, `φ = u⁴`, no source. The flux is traced
    /// lazily wherever a walk samples the boundary.
    pub fn problem(&self, scene: Arc<Scene>) -> Problem {
        let (l0, k, w) = (self.l0, self.conductivity, self.omega0());
        let flux = SurfaceField::func(move |s| directional_flux(&scene, s, l0, w) / k);
        let bc = BoundaryConditionSpec::dirichlet(SurfaceField::Constant(0.0))
            .with_flux(flux)
            .with_robin(
                SurfaceField::Constant(self.emissivity * STEFAN_BOLTZMANN / k),
                Nonlinearity::quartic(1.0),
            );
        Problem {
            bc,
            reference: None,
            initial_guess: if l0 > 0.0 {
                equilibrium_initial_guess(l0, self.emissivity)
            } else {
                0.0
            },
        }
    }
}

/// The `scenario` block of a solver config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioSpec {
    Manufactured {
        #[serde(default = "default_omega")]
        omega: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_powers")]
        powers: Vec<f64>,
    },
    Coupled {
        #[serde(rename = "L0")]
        l0: f64,
        light_dir: [f64; 3],
        #[serde(default = "one")]
        emissivity: f64,
        #[serde(default = "one")]
        conductivity: f64,
    },
    /// Constant exact solution on an all-radiative body.
    Constant {
        value: f64,
        mu: f64,
        #[serde(default = "default_power")]
        power: f64,
    },
}

fn default_omega() -> f64 {
    std::f64::consts::PI
}
fn default_gamma() -> f64 {
    1e-3
}
fn default_powers() -> Vec<f64> {
    vec![4.0]
}
fn default_power() -> f64 {
    4.0
}
fn one() -> f64 {
    1.0
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |field: &str, msg: String| Err((field.to_string(), msg));
        match self {
            ScenarioSpec::Manufactured { omega, gamma, powers } => {
                if !omega.is_finite() {
                    return err("omega", format!("{omega} must be finite"));
                }
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return err("gamma", format!("{gamma} must be >= 0"));
                }
                if powers.is_empty() || powers.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                    return err("powers", "exponents must be >= 1 and at least one is needed".into());
                }
                Ok(())
            }
            ScenarioSpec::Coupled { l0, light_dir, emissivity, conductivity } => {
                RadiativeVacuumProblem {
                    l0: *l0,
                    light_dir: *light_dir,
                    emissivity: *emissivity,
                    conductivity: *conductivity,
                }
                .validate()
                .map_err(|m| {
                    let field = ["emissivity", "L0", "conductivity", "light_dir"]
                        .into_iter()
                        .find(|f| m.starts_with(f))
                        .unwrap_or("type");
                    (field.to_string(), m)
                })
            }
            ScenarioSpec::Constant { value, mu, power } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return err("value", format!("{value} must be >= 0"));
                }
                if !(*mu > 0.0 && mu.is_finite()) {
                    return err("mu", format!("{mu} must be > 0"));
                }
                if !(*power >= 1.0) {
                    return err("power", format!("{power} must be >= 1"));
                }
                Ok(())
            }
        }
    }

    pub fn problem(&self, scene: Arc<Scene>) -> Problem {
        match self {
            ScenarioSpec::Manufactured { omega, gamma, powers } => {
                ManufacturedProblem::new(*omega, *gamma)
                    .with_powers(powers.clone())
                    .problem()
            }
            ScenarioSpec::Coupled { l0, light_dir, emissivity, conductivity } => RadiativeVacuumProblem {
                l0: *l0,
                light_dir: *light_dir,
                emissivity: *emissivity,
                conductivity: *conductivity,
            }
            .problem(scene),
            ScenarioSpec::Constant { value, mu, power } => constant_problem(*value, *mu, *power),
        }
    }
}
