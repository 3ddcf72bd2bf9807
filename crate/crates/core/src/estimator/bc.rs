use std::fmt;
use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::geometry::SurfaceSample;

/// Default floor applied to frozen proxy values before exponentiation.
pub const DEFAULT_U_FLOOR: f64 = 1e-6;

pub type SurfaceFn = Arc<dyn Fn(&SurfaceSample) -> f64 + Send + Sync>;
pub type VolumeFn = Arc<dyn Fn(DVec3) -> f64 + Send + Sync>;

/// Boundary data given either as a constant or as a callable.
#[derive(Clone)]
pub enum SurfaceField {
    Constant(f64),
    Func(SurfaceFn),
}

impl SurfaceField {
    pub fn func(f: impl Fn(&SurfaceSample) -> f64 + Send + Sync + 'static) -> Self {
        SurfaceField::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, s: &SurfaceSample) -> f64 {
        match self {
            SurfaceField::Constant(c) => *c,
            SurfaceField::Func(f) => f(s),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            SurfaceField::Constant(c) => Some(*c),
            SurfaceField::Func(_) => None,
        }
    }

    /// Pointwise product with `factor`, keeping constants constant.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            SurfaceField::Constant(v) => SurfaceField::Constant(v * factor),
            SurfaceField::Func(f) => {
                let f = f.clone();
                SurfaceField::Func(Arc::new(move |s| factor * f(s)))
            }
        }
    }
}

impl fmt::Debug for SurfaceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceField::Constant(c) => write!(f, "Constant({c})"),
            SurfaceField::Func(_) => f.write_str("Func(..)"),
        }
    }
}

/// One term `γ · u^p` of the boundary nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub gamma: f64,
    pub power: f64,
}

/// `φ(u) = Σ γ_k u^{p_k}`, linearized as `ψ(u₀) · u` with
/// `ψ(u₀) = Σ γ_k u₀^{p_k − 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity {
    pub terms: Vec<PowerTerm>,
    pub u_floor: f64,
}

impl Nonlinearity {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Nonlinearity {
            terms: terms
                .into_iter()
                .map(|(gamma, power)| PowerTerm { gamma, power })
                .collect(),
            u_floor: DEFAULT_U_FLOOR,
        }
    }

    /// Linear Robin, `φ(u) = u`.
    pub fn linear() -> Self {
        Self::new([(1.0, 1.0)])
    }

    /// Stefan–Boltzmann style `γ u⁴`.
    pub fn quartic(gamma: f64) -> Self {
        Self::new([(gamma, 4.0)])
    }

    pub fn validate(&self) -> Result<(), String> {
        for (k, t) in self.terms.iter().enumerate() {
            if !(t.gamma >= 0.0 && t.gamma.is_finite()) {
                return Err(format!("term {k}: coefficient {} must be finite and >= 0", t.gamma));
            }
            if !(t.power >= 1.0 && t.power.is_finite()) {
                return Err(format!("term {k}: exponent {} must be >= 1", t.power));
            }
        }
        if !(self.u_floor > 0.0) {
            return Err("u_floor must be > 0".into());
        }
        Ok(())
    }

    /// Frozen coefficient `ψ(u₀)`.
    #[inline]
    pub fn freeze(&self, u0: f64) -> f64 {
        let u = u0.max(self.u_floor);
        self.terms
            .iter()
            .map(|t| {
                if t.power == 1.0 {
                    t.gamma
                } else {
                    t.gamma * u.powf(t.power - 1.0)
                }
            })
            .sum()
    }

    /// `φ(u)` itself.
    pub fn eval(&self, u: f64) -> f64 {
        self.terms.iter().map(|t| t.gamma * u.powf(t.power)).sum()
    }

    /// `φ'(u)`.
    pub fn derivative(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.gamma * t.power * u.powf(t.power - 1.0))
            .sum()
    }

    /// The term with the largest exponent among those with `γ > 0`.
    pub fn dominant(&self) -> Option<PowerTerm> {
        self.terms
            .iter()
            .filter(|t| t.gamma > 0.0)
            .copied()
            .max_by(|a, b| a.power.total_cmp(&b.power))
    }
}

/// Data of the mixed problem
///
/// ```text
///   −Δu = f            in Ω
///     u = g            on the Dirichlet part
/// ∂u/∂n + μ φ(u) = h   on the reflecting part (outward normal)
/// ```
#[derive(Clone, Debug)]
pub struct BoundaryConditionSpec {
    pub dirichlet: SurfaceField,
    pub flux: SurfaceField,
    pub robin: SurfaceField,
    pub nonlinearity: Nonlinearity,
    pub source: Option<VolumeFnBox>,
}

/// Debug-printable wrapper around an interior source callable.
#[derive(Clone)]
pub struct VolumeFnBox(pub VolumeFn);

impl fmt::Debug for VolumeFnBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VolumeFn(..)")
    }
}

impl BoundaryConditionSpec {
    /// Laplace problem with Dirichlet data only.
    pub fn dirichlet(g: SurfaceField) -> Self {
        BoundaryConditionSpec {
            dirichlet: g,
            flux: SurfaceField::Constant(0.0),
            robin: SurfaceField::Constant(0.0),
            nonlinearity: Nonlinearity::linear(),
            source: None,
        }
    }

    pub fn with_flux(mut self, h: SurfaceField) -> Self {
        self.flux = h;
        self
    }

    pub fn with_robin(mut self, mu: SurfaceField, phi: Nonlinearity) -> Self {
        self.robin = mu;
        self.nonlinearity = phi;
        self
    }

    pub fn with_source(mut self, f: impl Fn(DVec3) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(VolumeFnBox(Arc::new(f)));
        self
    }

    #[inline]
    pub fn source_at(&self, y: DVec3) -> f64 {
        self.source.as_ref().map_or(0.0, |f| (f.0)(y))
    }

    /// Effective frozen Robin coefficient `μ(z) ψ(u₀)` at a boundary point.
    #[inline]
    pub fn mu_eff(&self, z: &SurfaceSample, u0: f64) -> f64 {
        let mu = self.robin.eval(z);
        if mu == 0.0 {
            return 0.0;
        }
        mu * self.nonlinearity.freeze(u0)
    }

    /// True when the Robin coefficient is identically zero.
    pub fn is_neumann(&self) -> bool {
        self.robin.as_constant() == Some(0.0)
            || self.nonlinearity.terms.iter().all(|t| t.gamma == 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.nonlinearity.validate()?;
        if let Some(mu) = self.robin.as_constant() {
            if !(mu >= 0.0) {
                return Err(format!("robin coefficient {mu} must be >= 0"));
            }
        }
        Ok(())
    }
}
