//! Run configuration: a TOML file describing the mesh, labels, scenario,
//! estimator, Picard and proxy settings, and the optional denoiser step.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Validation errors name the offending field as `section.key`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary_field::{read_samples_csv, MlsParams, DEFAULT_MARGIN};
use crate::estimator::EstimatorConfig;
use crate::geometry::shapes::{cuboid, icosphere};
use crate::geometry::{read_label_file, read_mesh, BoundaryLabel, LabelRule, Scene, TriangleMesh};
use crate::picard::{InitialGuess, PicardConfig, ResamplePolicy, DEFAULT_RESCALE_TARGET};
use crate::scenarios::{Problem, ScenarioSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// The dotted field path for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mesh: MeshSection,
    #[serde(default)]
    pub labels: LabelSection,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub proxy: ProxySection,
    #[serde(default)]
    pub denoise: DenoiseSection,
    /// Where artifacts go unless `--output-dir` is given.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Either a mesh file or a generated shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub shape: Option<Shape>,
    /// Subdivision level of the generated icosphere.
    #[serde(default = "default_level")]
    pub level: u32,
    /// Fit the mesh into [−1, 1]³ after loading.
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Unit sphere around the origin.
    Icosphere,
    /// The cube [−1, 1]³.
    Cube,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum LabelSection {
    Uniform {
        #[serde(default = "default_label")]
        label: BoundaryLabel,
    },
    /// Faces on the `normal` side of the plane are Dirichlet.
    Halfspace {
        #[serde(default)]
        point: [f64; 3],
        normal: [f64; 3],
    },
    File { path: PathBuf },
}

impl Default for LabelSection {
    fn default() -> Self {
        LabelSection::Uniform {
            label: BoundaryLabel::Reflecting,
        }
    }
}

/// Unset lengths default to 1e-3 × the scene diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default = "default_walks")]
    pub walks: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub min_radius: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_roulette")]
    pub roulette_threshold: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            walks: default_walks(),
            epsilon: None,
            max_steps: default_max_steps(),
            min_radius: None,
            seed: 0,
            roulette_threshold: default_roulette(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub resample: ResamplePolicy,
    /// Constant starting proxy; the scenario's suggestion when unset.
    #[serde(default)]
    pub initial_guess: Option<f64>,
    /// Snapshot CSV to start from instead of a constant.
    #[serde(default)]
    pub initial_field: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub rescale: bool,
    #[serde(default = "default_rescale_target")]
    pub rescale_target: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection {
            iterations: default_iterations(),
            alpha: default_alpha(),
            samples: default_samples(),
            resample: ResamplePolicy::Fresh,
            initial_guess: None,
            initial_field: None,
            rescale: true,
            rescale_target: default_rescale_target(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxySection {
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for ProxySection {
    fn default() -> Self {
        ProxySection {
            radius: None,
            bandwidth: None,
            margin: DEFAULT_MARGIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiseMode {
    Hetero,
    Homo,
}

impl DenoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DenoiseMode::Hetero => "hetero",
            DenoiseMode::Homo => "homo",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseSection {
    #[serde(default)]
    pub enabled: bool,
    /// Executable invoked as `<command> --input .. --output .. --beta ..
    /// --epochs .. --mode .. --seed ..`.
    #[serde(default = "default_denoise_command")]
    pub command: String,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    #[serde(default = "default_mode")]
    pub mode: DenoiseMode,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DenoiseSection {
    fn default() -> Self {
        DenoiseSection {
            enabled: false,
            command: default_denoise_command(),
            beta: default_beta(),
            epochs: default_epochs(),
            mode: default_mode(),
            seed: 0,
        }
    }
}

fn default_level() -> u32 {
    3
}
fn default_label() -> BoundaryLabel {
    BoundaryLabel::Reflecting
}
fn default_walks() -> usize {
    64
}
fn default_max_steps() -> usize {
    10_000
}
fn default_roulette() -> f64 {
    0.1
}
fn default_iterations() -> usize {
    6
}
fn default_alpha() -> f64 {
    0.25
}
fn default_samples() -> usize {
    2000
}
fn default_true() -> bool {
    true
}
fn default_rescale_target() -> f64 {
    DEFAULT_RESCALE_TARGET
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_denoise_command() -> String {
    "denoise".into()
}
fn default_beta() -> f64 {
    0.5
}
fn default_epochs() -> u32 {
    3000
}
fn default_mode() -> DenoiseMode {
    DenoiseMode::Hetero
}

fn positive(field: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::invalid(field, format!("{x} must be > 0"))),
        _ => Ok(()),
    }
}

impl SolverConfig {
    /// Parses TOML text; relative paths stay relative.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.mesh.path {
            fix(p);
        }
        if let LabelSection::File { path } = &mut self.labels {
            fix(path);
        }
        if let Some(p) = &mut self.picard.initial_field {
            fix(p);
        }
        if let Some(p) = &mut self.output_dir {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.mesh.path, self.mesh.shape) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid("mesh", "give either path or shape, not both"));
            }
            (None, None) => return Err(ConfigError::invalid("mesh", "needs a path or a shape")),
            (Some(p), None) if !p.is_file() => {
                return Err(ConfigError::invalid("mesh.path", format!("{} does not exist", p.display())));
            }
            _ => {}
        }
        if self.mesh.level > 7 {
            return Err(ConfigError::invalid("mesh.level", format!("{} must be <= 7", self.mesh.level)));
        }
        match &self.labels {
            LabelSection::File { path } if !path.is_file() => {
                return Err(ConfigError::invalid("labels.path", format!("{} does not exist", path.display())));
            }
            LabelSection::Halfspace { point, normal } => {
                let n = DVec3::from_array(*normal);
                if !(n.length() > 0.0 && n.is_finite() && DVec3::from_array(*point).is_finite()) {
                    return Err(ConfigError::invalid("labels.normal", "must be a finite nonzero vector"));
                }
            }
            _ => {}
        }
        self.scenario
            .validate()
            .map_err(|(field, message)| ConfigError::invalid(format!("scenario.{field}"), message))?;

        let e = &self.estimator;
        if e.walks < 1 {
            return Err(ConfigError::invalid("estimator.walks", "must be >= 1"));
        }
        if e.max_steps < 1 {
            return Err(ConfigError::invalid("estimator.max_steps", "must be >= 1"));
        }
        positive("estimator.epsilon", e.epsilon)?;
        positive("estimator.min_radius", e.min_radius)?;
        if !(0.0..=1.0).contains(&e.roulette_threshold) {
            return Err(ConfigError::invalid("estimator.roulette_threshold", "must lie in [0, 1]"));
        }

        let p = &self.picard;
        if p.iterations < 1 {
            return Err(ConfigError::invalid("picard.iterations", "must be >= 1"));
        }
        if !(p.alpha > 0.0 && p.alpha <= 1.0) {
            return Err(ConfigError::invalid("picard.alpha", format!("{} must lie in (0, 1]", p.alpha)));
        }
        if p.samples < 4 {
            return Err(ConfigError::invalid("picard.samples", "must be >= 4"));
        }
        if let Some(g) = p.initial_guess {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(ConfigError::invalid("picard.initial_guess", format!("{g} must be finite and >= 0")));
            }
        }
        if let Some(f) = &p.initial_field {
            if !f.is_file() {
                return Err(ConfigError::invalid(
                    "picard.initial_field",
                    format!("{} does not exist", f.display()),
                ));
            }
        }
        positive("picard.rescale_target", Some(p.rescale_target))?;

        positive("proxy.radius", self.proxy.radius)?;
        positive("proxy.bandwidth", self.proxy.bandwidth)?;
        if !(self.proxy.margin >= 0.0 && self.proxy.margin.is_finite()) {
            return Err(ConfigError::invalid("proxy.margin", "must be >= 0"));
        }

        let d = &self.denoise;
        if !(0.0..=1.0).contains(&d.beta) {
            return Err(ConfigError::invalid("denoise.beta", format!("{} must lie in [0, 1]", d.beta)));
        }
        if d.epochs < 1 {
            return Err(ConfigError::invalid("denoise.epochs", "must be >= 1"));
        }
        if d.enabled && d.command.trim().is_empty() {
            return Err(ConfigError::invalid("denoise.command", "must not be empty"));
        }
        Ok(())
    }

    /// The triangle mesh before labeling.
    pub fn mesh(&self) -> Result<TriangleMesh, ConfigError> {
        let mesh = match (&self.mesh.path, self.mesh.shape) {
            (Some(path), _) => read_mesh(path).map_err(|e| ConfigError::invalid("mesh.path", e.to_string()))?,
            (None, Some(Shape::Icosphere)) => icosphere(DVec3::ZERO, 1.0, self.mesh.level),
            (None, Some(Shape::Cube)) => cuboid(DVec3::splat(-1.0), DVec3::ONE),
            (None, None) => return Err(ConfigError::invalid("mesh", "needs a path or a shape")),
        };
        Ok(if self.mesh.normalize { mesh.fit_unit_cube() } else { mesh })
    }

    pub fn scene(&self) -> Result<Scene, ConfigError> {
        let mesh = self.mesh()?;
        let rule = match &self.labels {
            LabelSection::Uniform { label } => LabelRule::Uniform(*label),
            LabelSection::Halfspace { point, normal } => LabelRule::HalfSpace {
                point: DVec3::from_array(*point),
                normal: DVec3::from_array(*normal),
            },
            LabelSection::File { path } => LabelRule::PerFace(
                read_label_file(path, mesh.triangles.len())
                    .map_err(|e| ConfigError::invalid("labels.path", e.to_string()))?,
            ),
        };
        Scene::from_mesh(mesh, &rule).map_err(|e| ConfigError::invalid("mesh", e.to_string()))
    }

    pub fn problem(&self, scene: Arc<Scene>) -> Problem {
        self.scenario.problem(scene)
    }

    pub fn mls(&self) -> MlsParams {
        MlsParams {
            radius: self.proxy.radius,
            bandwidth: self.proxy.bandwidth,
        }
    }

    /// Estimator settings with scene-relative defaults filled in.
    pub fn estimator(&self, scene: &Scene) -> Result<EstimatorConfig, ConfigError> {
        let mut est = EstimatorConfig::for_scene(scene);
        est.walks = self.estimator.walks;
        est.max_steps = self.estimator.max_steps;
        est.seed = self.estimator.seed;
        est.roulette_threshold = self.estimator.roulette_threshold;
        if let Some(eps) = self.estimator.epsilon {
            est.epsilon_shell = eps;
        }
        if let Some(r) = self.estimator.min_radius {
            est.min_radius = r;
        }
        est.validate(scene).map_err(|m| {
            let field = if m.starts_with("epsilon") { "estimator.epsilon" } else { "estimator" };
            ConfigError::invalid(field, m)
        })?;
        Ok(est)
    }

    pub fn picard(&self, scene: &Scene, problem: &Problem) -> Result<PicardConfig, ConfigError> {
        let initial = match &self.picard.initial_field {
            Some(path) => InitialGuess::Field(
                read_samples_csv(path).map_err(|e| ConfigError::invalid("picard.initial_field", e.to_string()))?,
            ),
            None => InitialGuess::Constant(self.picard.initial_guess.unwrap_or(problem.initial_guess)),
        };
        let mut cfg = PicardConfig::new(self.estimator(scene)?, initial);
        cfg.iterations = self.picard.iterations;
        cfg.alpha = self.picard.alpha;
        cfg.samples = self.picard.samples;
        cfg.resample = self.picard.resample;
        cfg.rescale_target = self.picard.rescale.then_some(self.picard.rescale_target);
        cfg.mls = self.mls();
        cfg.margin = self.proxy.margin;
        cfg.validate().map_err(|m| ConfigError::invalid("picard", m))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [mesh]
        shape = "icosphere"
        level = 1

        [scenario]
        type = "constant"
        value = 10.0
        mu = 1e-3
    "#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = SolverConfig::from_toml(MINIMAL, "inline").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.picard, PicardSection::default());
        assert_eq!(cfg.estimator.walks, 64);
        assert_eq!(cfg.labels, LabelSection::default());
        let scene = cfg.scene().unwrap();
        assert_eq!(scene.triangle_count(), 80);
        let problem = cfg.problem(Arc::new(cfg.scene().unwrap()));
        let p = cfg.picard(&scene, &problem).unwrap();
        assert_eq!((p.iterations, p.alpha, p.samples), (6, 0.25, 2000));
        assert!(matches!(p.initial, InitialGuess::Constant(g) if g == 8.0));
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = SolverConfig::from_toml(MINIMAL, "inline").unwrap();
        cfg.picard.alpha = 0.0;
        assert_eq!(cfg.validate().unwrap_err().field(), Some("picard.alpha"));
        cfg.picard.alpha = 0.5;
        cfg.estimator.walks = 0;
        assert_eq!(cfg.validate().unwrap_err().field(), Some("estimator.walks"));
        cfg.estimator.walks = 4;
        cfg.denoise.beta = 2.0;
        assert_eq!(cfg.validate().unwrap_err().field(), Some("denoise.beta"));
        cfg.denoise.beta = 0.5;
        cfg.scenario = ScenarioSpec::Constant {
            value: 1.0,
            mu: -1.0,
            power: 4.0,
        };
        assert_eq!(cfg.validate().unwrap_err().field(), Some("scenario.mu"));
    }

    #[test]
    fn unknown_keys_and_missing_files_are_rejected() {
        let bad = MINIMAL.replace("level = 1", "level = 1\nlevle = 2");
        assert!(matches!(SolverConfig::from_toml(&bad, "x"), Err(ConfigError::Parse { .. })));
        let mut cfg = SolverConfig::from_toml(MINIMAL, "inline").unwrap();
        cfg.mesh.shape = None;
        cfg.mesh.path = Some("/nonexistent/ball.obj".into());
        assert_eq!(cfg.validate().unwrap_err().field(), Some("mesh.path"));
    }

    #[test]
    fn halfspace_labels_and_normalization() {
        let text = r#"
            output_dir = "out"
            [mesh]
            shape = "cube"
            normalize = true
            [labels]
            rule = "halfspace"
            normal = [1.0, 0.0, 0.0]
            [scenario]
            type = "manufactured"
            [estimator]
            epsilon = 1e-3
            [picard]
            resample = "fixed"
        "#;
        let mut cfg = SolverConfig::from_toml(text, "inline").unwrap();
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.output_dir.as_deref(), Some(Path::new("/base/out")));
        let scene = cfg.scene().unwrap();
        assert!(scene.has_label(BoundaryLabel::Dirichlet) && scene.has_label(BoundaryLabel::Reflecting));
        assert_eq!(cfg.estimator(&scene).unwrap().epsilon_shell, 1e-3);
        assert_eq!(cfg.picard.resample, ResamplePolicy::Fixed);
        // epsilon beyond the scene size is a field error
        cfg.estimator.epsilon = Some(100.0);
        assert_eq!(cfg.estimator(&scene).unwrap_err().field(), Some("estimator.epsilon"));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = SolverConfig::from_toml(MINIMAL, "inline").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(SolverConfig::from_toml(&text, "again").unwrap(), cfg);
    }
}
