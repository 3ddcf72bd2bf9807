//! Fixed-point driver for the nonlinear boundary condition: freeze the
//! nonlinearity at the current proxy, solve the linear Robin problem on
//! boundary samples, blend with the previous iterate, rebuild the proxy.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary_field::{
    triangle_coefficient_bounds, FieldError, MlsParams, ProxyField, ProxySample, DEFAULT_MARGIN,
};
use crate::estimator::{
    estimate_at, BoundaryConditionSpec, EstimatorConfig, Nonlinearity, PowerTerm, StartPoint,
    VolumeFn, VolumeFnBox, WalkContext,
};
use crate::geometry::{GeometryError, LabelSet, Scene, SurfaceSample};
use crate::rng::mix;

/// Default coefficient of the dominant term after rescaling.
pub const DEFAULT_RESCALE_TARGET: f64 = 1e-3;
const SAMPLING_TAG: u64 = 0x5a4d_504c_4553;

#[derive(Debug, Error)]
pub enum PicardError {
    #[error("invalid picard configuration: {0}")]
    Config(String),
    #[error("iteration {iteration}: boundary sampling failed: {source}")]
    Sampling {
        iteration: usize,
        source: GeometryError,
    },
    #[error("iteration {iteration}: proxy rebuild failed: {source}")]
    Field {
        iteration: usize,
        source: FieldError,
    },
    #[error("iteration {iteration}: non-finite estimate {value} at point {index} ({point})")]
    NonFinite {
        iteration: usize,
        index: usize,
        point: DVec3,
        value: f64,
    },
}

/// Starting proxy.
#[derive(Clone)]
pub enum InitialGuess {
    Constant(f64),
    Formula(VolumeFn),
    /// Previously exported samples, e.g. a snapshot CSV.
    Field(Vec<ProxySample>),
}

impl fmt::Debug for InitialGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGuess::Constant(c) => write!(f, "Constant({c})"),
            InitialGuess::Formula(_) => f.write_str("Formula(..)"),
            InitialGuess::Field(s) => write!(f, "Field({} samples)", s.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResamplePolicy {
    /// New boundary points every iteration.
    #[default]
    Fresh,
    /// The iteration-0 points throughout.
    Fixed,
}

#[derive(Clone, Debug)]
pub struct PicardConfig {
    pub iterations: usize,
    pub alpha: f64,
    pub samples: usize,
    pub estimator: EstimatorConfig,
    pub initial: InitialGuess,
    pub resample: ResamplePolicy,
    /// `None` disables rescaling.
    pub rescale_target: Option<f64>,
    pub mls: MlsParams,
    pub margin: f64,
}

impl PicardConfig {
    pub fn new(estimator: EstimatorConfig, initial: InitialGuess) -> Self {
        PicardConfig {
            iterations: 6,
            alpha: 0.25,
            samples: 2000,
            estimator,
            initial,
            resample: ResamplePolicy::Fresh,
            rescale_target: Some(DEFAULT_RESCALE_TARGET),
            mls: MlsParams::default(),
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.iterations < 1 {
            return Err("iterations must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(format!("alpha {} must lie in (0, 1]", self.alpha));
        }
        if self.samples < 4 {
            return Err(format!("samples {} must be >= 4", self.samples));
        }
        if let Some(t) = self.rescale_target {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("rescale target {t} must be > 0"));
            }
        }
        if !(self.margin >= 0.0) {
            return Err(format!("margin {} must be >= 0", self.margin));
        }
        match &self.initial {
            InitialGuess::Constant(c) if !(c.is_finite() && *c >= 0.0) => {
                Err(format!("initial guess {c} must be finite and >= 0"))
            }
            InitialGuess::Field(s) if s.is_empty() => Err("initial field has no samples".into()),
            _ => Ok(()),
        }
    }
}

/// Rescaled problem: the solution of `scaled` times `factor` solves the
/// original problem.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub bc: BoundaryConditionSpec,
    pub factor: f64,
}

/// Chooses `c` so the dominant term's coefficient `μ_ref · γ · c^(p−1)`
/// equals `target`, and rewrites the problem for `v = u / c`: `g, h, f`
/// are divided by `c`, each `γ_k` is multiplied by `c^(p_k − 1)`.
/// Problems without a superlinear term are returned unchanged.
pub fn rescale_problem(bc: &BoundaryConditionSpec, target: f64, mu_ref: f64) -> Rescaled {
    let identity = Rescaled {
        bc: bc.clone(),
        factor: 1.0,
    };
    let Some(dom) = bc.nonlinearity.dominant() else {
        return identity;
    };
    if dom.power <= 1.0 || !(mu_ref > 0.0) {
        return identity;
    }
    let c = (target / (dom.gamma * mu_ref)).powf(1.0 / (dom.power - 1.0));
    if !(c.is_finite() && c > 0.0) {
        return identity;
    }
    Rescaled {
        bc: scale_problem(bc, c),
        factor: c,
    }
}

/// The problem for `v = u / c`.
pub fn scale_problem(bc: &BoundaryConditionSpec, c: f64) -> BoundaryConditionSpec {
    let inv = 1.0 / c;
    let terms = bc
        .nonlinearity
        .terms
        .iter()
        .map(|t| PowerTerm {
            gamma: t.gamma * c.powf(t.power - 1.0),
            power: t.power,
        })
        .collect();
    BoundaryConditionSpec {
        dirichlet: bc.dirichlet.scaled(inv),
        flux: bc.flux.scaled(inv),
        robin: bc.robin.clone(),
        nonlinearity: Nonlinearity {
            terms,
            u_floor: bc.nonlinearity.u_floor * inv,
        },
        source: bc.source.as_ref().map(|f| {
            let f = f.0.clone();
            VolumeFnBox(std::sync::Arc::new(move |y| inv * f(y)))
        }),
    }
}

/// Area-weighted mean of `μ` over reflecting triangle centroids.
pub fn reference_mu(scene: &Scene, bc: &BoundaryConditionSpec) -> f64 {
    if let Some(mu) = bc.robin.as_constant() {
        return mu;
    }
    let Ok(tris) = scene.filter_triangles(LabelSet::Reflecting) else {
        return 0.0;
    };
    let third = 1.0 / 3.0;
    let (mut sum, mut area) = (0.0, 0.0);
    for &t in tris {
        let s = scene.sample_on(t, [third; 3]);
        sum += scene.area(t) * bc.robin.eval(&s);
        area += scene.area(t);
    }
    if area > 0.0 {
        sum / area
    } else {
        0.0
    }
}

/// Elementwise `α u_new + (1 − α) u_prev`.
pub fn relax(u_new: &[f64], u_prev: &[f64], alpha: f64) -> Result<Vec<f64>, String> {
    if u_new.len() != u_prev.len() {
        return Err(format!(
            "length mismatch: {} new values vs {} previous",
            u_new.len(),
            u_prev.len()
        ));
    }
    Ok(u_new
        .iter()
        .zip(u_prev)
        .map(|(&n, &p)| alpha * n + (1.0 - alpha) * p)
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// Against the reference at this iteration's sample points, when given.
    pub mse: Option<f64>,
    /// `‖u_n − u_{n−1}‖² / ‖u_{n−1}‖²` at this iteration's sample points.
    pub rel_change: f64,
    /// Mean of `u_n − u_{n−1}` at the sample points.
    pub mean_increment: f64,
    pub truncated_fraction: f64,
    pub clipped_fraction: f64,
    pub mean_steps: f64,
    pub seconds: f64,
}

/// Snapshots (index 0 is the initial guess) and per-iteration metrics, all
/// in original units.
#[derive(Clone, Debug)]
pub struct PicardHistory {
    pub snapshots: Vec<ProxyField>,
    pub metrics: Vec<IterationMetrics>,
    pub scale: f64,
}

impl PicardHistory {
    pub fn final_field(&self) -> &ProxyField {
        self.snapshots.last().expect("history holds the initial guess")
    }

    pub fn iterations(&self) -> usize {
        self.metrics.len()
    }

    pub fn mse_series(&self) -> Vec<Option<f64>> {
        self.metrics.iter().map(|m| m.mse).collect()
    }

    /// Number of sign changes in the sequence of mean increments from
    /// iteration `from` (1-based) on. Zero increments are skipped.
    pub fn sign_alternations(&self, from: usize) -> usize {
        let signs: Vec<f64> = self
            .metrics
            .iter()
            .filter(|m| m.iteration >= from && m.mean_increment != 0.0)
            .map(|m| m.mean_increment.signum())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Writes `iter_XXX.csv` per snapshot and `metrics.json`.
    pub fn export(&self, dir: &Path) -> Result<(), FieldError> {
        std::fs::create_dir_all(dir).map_err(|source| FieldError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (i, snap) in self.snapshots.iter().enumerate() {
            snap.write_csv(&dir.join(snapshot_name(i)))?;
        }
        let path = dir.join("metrics.json");
        let json = serde_json::to_string_pretty(&self.metrics).expect("metrics serialize");
        std::fs::write(&path, json + "\n").map_err(|source| FieldError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub fn snapshot_name(iteration: usize) -> String {
    format!("iter_{iteration:03}.csv")
}

/// Indicator used by the ablations: at least two sign changes of the mean
/// increment.
pub fn oscillates(history: &PicardHistory) -> bool {
    history.sign_alternations(1) >= 2
}

fn sample_points(scene: &Scene, n: usize, seed: u64, iteration: usize) -> Result<Vec<SurfaceSample>, PicardError> {
    scene
        .sample_boundary_uniform(LabelSet::Reflecting, n, mix(&[seed, SAMPLING_TAG, iteration as u64]))
        .map_err(|source| PicardError::Sampling { iteration, source })
}

fn unscaled(field: &ProxyField, factor: f64, params: MlsParams) -> Result<ProxyField, FieldError> {
    if factor == 1.0 {
        return Ok(field.clone());
    }
    let samples = field
        .samples()
        .iter()
        .map(|s| ProxySample {
            value: s.value * factor,
            sigma: s.sigma.map(|v| v * factor),
            ..*s
        })
        .collect();
    ProxyField::build(
        samples,
        MlsParams {
            radius: Some(field.radius()),
            bandwidth: Some(field.bandwidth()).or(params.bandwidth),
        },
    )
}

/// Runs `cfg.iterations` solve-and-relax rounds. `reference`, in original
/// units, enables the MSE column.
pub fn run_picard(
    scene: &Scene,
    bc: &BoundaryConditionSpec,
    cfg: &PicardConfig,
    reference: Option<&(dyn Fn(DVec3) -> f64 + Sync)>,
) -> Result<PicardHistory, PicardError> {
    cfg.validate().map_err(PicardError::Config)?;
    cfg.estimator
        .validate(scene)
        .map_err(PicardError::Config)?;
    bc.validate().map_err(PicardError::Config)?;

    let Rescaled { bc: sbc, factor } = match cfg.rescale_target {
        Some(target) => rescale_problem(bc, target, reference_mu(scene, bc)),
        None => Rescaled {
            bc: bc.clone(),
            factor: 1.0,
        },
    };
    let inv = 1.0 / factor;
    log::info!("picard: scale factor {factor}, {} iterations, alpha {}", cfg.iterations, cfg.alpha);

    let field_err = |iteration| move |source| PicardError::Field { iteration, source };

    // iteration 0
    let first_points = sample_points(scene, cfg.samples, cfg.estimator.seed, 0)?;
    let initial: Vec<ProxySample> = match &cfg.initial {
        InitialGuess::Constant(c) => first_points.iter().map(|p| ProxySample::on(p, c * inv)).collect(),
        InitialGuess::Formula(f) => first_points
            .iter()
            .map(|p| ProxySample::on(p, f(p.position) * inv))
            .collect(),
        InitialGuess::Field(samples) => samples
            .iter()
            .map(|s| ProxySample {
                value: s.value * inv,
                sigma: None,
                ..*s
            })
            .collect(),
    };
    let mut field = ProxyField::build(initial, cfg.mls).map_err(field_err(0))?;
    if matches!(cfg.initial, InitialGuess::Field(_)) {
        field.assign_homes(scene);
    }
    let mut snapshots = vec![unscaled(&field, factor, cfg.mls).map_err(field_err(0))?];
    let mut metrics = Vec::with_capacity(cfg.iterations);

    for iteration in 1..=cfg.iterations {
        let start = Instant::now();
        let bounds = triangle_coefficient_bounds(&field, scene, &sbc, cfg.margin);
        let points = match cfg.resample {
            ResamplePolicy::Fresh => sample_points(scene, cfg.samples, cfg.estimator.seed, iteration)?,
            ResamplePolicy::Fixed => first_points.clone(),
        };
        let starts: Vec<StartPoint> = points.iter().map(|&p| StartPoint::Boundary(p)).collect();
        let ctx = WalkContext {
            scene,
            bounds: &bounds,
            bc: &sbc,
            proxy: &field,
            config: &cfg.estimator,
        };
        let stats = estimate_at(&ctx, &starts, iteration as u64);
        if let Some((index, s)) = stats.iter().enumerate().find(|(_, s)| !s.mean.is_finite()) {
            return Err(PicardError::NonFinite {
                iteration,
                index,
                point: points[index].position,
                value: s.mean,
            });
        }
        let fresh: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        let previous: Vec<f64> = match (cfg.resample, &cfg.initial, iteration) {
            // the same points carry their own previous values, except an
            // imported field at iteration 1 lives on different points
            (ResamplePolicy::Fixed, InitialGuess::Field(_), 1) | (ResamplePolicy::Fresh, _, _) => {
                points.iter().map(|p| field.eval_mls(p.position)).collect()
            }
            (ResamplePolicy::Fixed, _, _) => field.samples().iter().map(|s| s.value).collect(),
        };
        let relaxed: Vec<f64> = relax(&fresh, &previous, cfg.alpha)
            .expect("equal lengths")
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();

        let n = relaxed.len() as f64;
        let mut diff2 = 0.0;
        let mut prev2 = 0.0;
        let mut inc = 0.0;
        for (r, p) in relaxed.iter().zip(&previous) {
            diff2 += (r - p) * (r - p);
            prev2 += p * p;
            inc += r - p;
        }
        let mse = reference.map(|u| {
            relaxed
                .iter()
                .zip(&points)
                .map(|(v, p)| (v * factor - u(p.position)).powi(2))
                .sum::<f64>()
                / n
        });
        let walks = (stats.len() * cfg.estimator.walks) as f64;
        let samples: Vec<ProxySample> = points
            .iter()
            .zip(&relaxed)
            .zip(&stats)
            .map(|((p, &v), s)| ProxySample {
                sigma: Some(s.std_error()),
                ..ProxySample::on(p, v)
            })
            .collect();
        field = ProxyField::build(samples, cfg.mls).map_err(field_err(iteration))?;
        let seconds = start.elapsed().as_secs_f64();
        let m = IterationMetrics {
            iteration,
            mse,
            rel_change: if prev2 > 0.0 { diff2 / prev2 } else { diff2 },
            mean_increment: inc / n * factor,
            truncated_fraction: stats.iter().map(|s| s.truncated).sum::<usize>() as f64 / walks,
            clipped_fraction: stats.iter().map(|s| s.clipped).sum::<usize>() as f64 / walks,
            mean_steps: stats.iter().map(|s| s.steps).sum::<usize>() as f64 / walks,
            seconds,
        };
        log::info!(
            "iteration {iteration}: mse {:?} rel_change {:.3e} increment {:.4e} truncated {:.4} clipped {:.4} steps {:.1} ({seconds:.1}s)",
            m.mse,
            m.rel_change,
            m.mean_increment,
            m.truncated_fraction,
            m.clipped_fraction,
            m.mean_steps
        );
        metrics.push(m);
        snapshots.push(unscaled(&field, factor, cfg.mls).map_err(field_err(iteration))?);
    }
    Ok(PicardHistory {
        snapshots,
        metrics,
        scale: factor,
    })
}
