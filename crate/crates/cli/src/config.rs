//! JSON experiment configuration: schema, validation, and construction of
//! the core objects it describes.
//!
//! The schema is strict: unknown keys are rejected, and every command
//! validates the sections it needs before any computation runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qinfo_core::estimation::{FirstStageSpec, Strategy, TwoParamScheme, TwoStagePlan};
use qinfo_core::geometry::{linspace_exclusive, CurveSample, DEFAULT_GRID_POINTS};
use qinfo_core::{example_model, full_sphere_model, HermitianOperator, Matrix, ParametricModel,
    Povm, SphericalAngles};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Qfi,
    Fisher,
    Chain,
    Attain,
    Classify,
    Simulate,
    Sweep,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Qfi => "qfi",
            CommandKind::Fisher => "fisher",
            CommandKind::Chain => "chain",
            CommandKind::Attain => "attain",
            CommandKind::Classify => "classify",
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// The worked example: known colatitude, unknown longitude.
    Example { eta: f64 },
    /// Completely unknown pure qubit state, parameters `(eta, phi)`.
    FullSphere,
    /// Bloch curve sampled in a CSV file with columns `theta,ux,uy,uz`.
    CurveCsv { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PovmSpec {
    /// Projective spin measurement along a Pauli axis.
    Pauli { axis: PauliAxis },
    /// Projective spin measurement in the equatorial plane.
    InPlane { azimuth: f64 },
    /// Equal mixture of σ_y and σ_z projective measurements.
    YzMix,
    /// Explicit elements; matrices are row-major `[re, im]` pairs.
    Custom { elements: Vec<PovmElementSpec> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PovmElementSpec {
    pub label: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    /// Total number of copies per replication.
    pub n: u64,
    /// First-stage exponent; defaults to 1/2.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<f64>,
    /// True `(eta, phi)` for the two-parameter strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_true: Option<[f64; 2]>,
    /// First stage of `adaptive_general`: defaults to the σ_x/σ_y scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_stage: Option<FirstStageKind>,
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    TwoStage,
    AdaptiveGeneral,
    TwoParamYz,
    TwoParamXOnly,
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::TwoStage => "two_stage",
            StrategySpec::AdaptiveGeneral => "adaptive_general",
            StrategySpec::TwoParamYz => "two_param_yz",
            StrategySpec::TwoParamXOnly => "two_param_x_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStageKind {
    ExampleXy,
    GridMle,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<RangeSpec>,
    /// Explicit grid values; overrides `phi` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
}

/// `count` evenly spaced points on `[start, stop)`.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.count == 0 {
            return Err(CliError::config("grid range needs count >= 1"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::config("grid range bounds must be finite"));
        }
        Ok(linspace_exclusive(self.start, self.stop, self.count))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, expected: CommandKind, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        if config.command != expected {
            return Err(CliError::config(format!(
                "config command '{}' does not match subcommand '{}'",
                config.command.name(),
                expected.name()
            )));
        }
        if let Some(seed) = seed_override {
            match &mut config.plan {
                Some(plan) => plan.seed = seed,
                None => {
                    return Err(CliError::config(
                        "--seed override requires a plan section in the config",
                    ))
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        match &self.model {
            ModelSpec::Example { eta } => {
                if !(*eta > 0.0 && *eta < std::f64::consts::PI) {
                    return Err(CliError::config(format!(
                        "example model needs eta in (0, pi), got {eta}"
                    )));
                }
            }
            ModelSpec::CurveCsv { path } => {
                if path.is_empty() {
                    return Err(CliError::config("curve_csv model needs a path"));
                }
            }
            ModelSpec::FullSphere => {}
        }
        match self.command {
            CommandKind::Fisher | CommandKind::Chain | CommandKind::Attain => {
                if self.povm.is_none() {
                    return Err(CliError::config(format!(
                        "command '{}' requires a povm section",
                        self.command.name()
                    )));
                }
            }
            CommandKind::Simulate | CommandKind::Sweep => {
                let plan = self.plan.as_ref().ok_or_else(|| {
                    CliError::config(format!(
                        "command '{}' requires a plan section",
                        self.command.name()
                    ))
                })?;
                plan.validate(&self.model, self.command)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical serialization used for the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

impl PlanSpec {
    fn validate(&self, model: &ModelSpec, command: CommandKind) -> Result<(), CliError> {
        if self.replications < 2 {
            return Err(CliError::config("plan needs replications >= 2"));
        }
        TwoStagePlan::new(self.n, self.alpha).map_err(|e| CliError::config(e.to_string()))?;
        let strategy = self.strategy.ok_or_else(|| {
            CliError::config("plan needs a strategy (two_stage, adaptive_general, two_param_yz, two_param_x_only)")
        })?;
        match strategy {
            StrategySpec::TwoStage | StrategySpec::AdaptiveGeneral => {
                if !matches!(model, ModelSpec::Example { .. }) {
                    return Err(CliError::config(format!(
                        "strategy '{}' needs the example model",
                        strategy.name()
                    )));
                }
                if self.theta_true.is_none() && command == CommandKind::Simulate {
                    return Err(CliError::config(format!(
                        "strategy '{}' needs theta_true",
                        strategy.name()
                    )));
                }
            }
            StrategySpec::TwoParamYz | StrategySpec::TwoParamXOnly => {
                let angles = self.angles_true.ok_or_else(|| {
                    CliError::config(format!("strategy '{}' needs angles_true", strategy.name()))
                })?;
                let angles = SphericalAngles::new(angles[0], angles[1])
                    .map_err(|e| CliError::config(e.to_string()))?;
                if angles.is_pole() {
                    return Err(CliError::config(
                        "angles_true must stay away from the poles",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn two_stage_plan(&self) -> TwoStagePlan {
        TwoStagePlan::new(self.n, self.alpha).expect("validated in PlanSpec::validate")
    }
}

/// A scalar-parameter model, a two-parameter model, or a sampled curve.
pub enum RunModel {
    Scalar(ParametricModel),
    Sphere(ParametricModel),
    Curve(CurveSample),
}

pub fn build_model(spec: &ModelSpec, config_dir: &Path) -> Result<RunModel, CliError> {
    match spec {
        ModelSpec::Example { eta } => Ok(RunModel::Scalar(
            example_model(*eta).map_err(CliError::numeric)?,
        )),
        ModelSpec::FullSphere => Ok(RunModel::Sphere(full_sphere_model())),
        ModelSpec::CurveCsv { path } => {
            let resolved = resolve_relative(config_dir, path);
            let sample = CurveSample::from_csv(&resolved).map_err(CliError::numeric)?;
            Ok(RunModel::Curve(sample))
        }
    }
}

fn resolve_relative(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn build_povm(spec: &PovmSpec) -> Result<Povm, CliError> {
    match spec {
        PovmSpec::Pauli { axis } => Ok(match axis {
            PauliAxis::X => Povm::pauli_x_projectors(),
            PauliAxis::Y => Povm::pauli_y_projectors(),
            PauliAxis::Z => Povm::pauli_z_projectors(),
        }),
        PovmSpec::InPlane { azimuth } => Ok(Povm::in_plane(*azimuth)),
        PovmSpec::YzMix => Ok(Povm::yz_mix()),
        PovmSpec::Custom { elements } => {
            let mut ops = Vec::with_capacity(elements.len());
            for el in elements {
                let dim = el.matrix.len();
                let mut m = Matrix::zeros(dim);
                for (i, row) in el.matrix.iter().enumerate() {
                    if row.len() != dim {
                        return Err(CliError::config(format!(
                            "element '{}' is not square",
                            el.label
                        )));
                    }
                    for (j, entry) in row.iter().enumerate() {
                        m.set(i, j, qinfo_core::Complex::new(entry[0], entry[1]));
                    }
                }
                let op = HermitianOperator::new(m).map_err(CliError::numeric)?;
                ops.push((el.label.clone(), op));
            }
            Povm::new(ops).map_err(CliError::numeric)
        }
    }
}

/// 1-d parameter grid: explicit values, a `phi` range, or the default
/// 64-point sweep of the full circle.
pub fn resolve_grid_1d(grid: &Option<GridSpec>) -> Result<Vec<f64>, CliError> {
    if let Some(spec) = grid {
        if let Some(thetas) = &spec.thetas {
            if thetas.is_empty() {
                return Err(CliError::config("explicit theta grid is empty"));
            }
            return Ok(thetas.clone());
        }
        if let Some(range) = &spec.phi {
            return range.points();
        }
    }
    Ok(linspace_exclusive(
        0.0,
        std::f64::consts::TAU,
        DEFAULT_GRID_POINTS,
    ))
}

/// Product grid over `(eta, phi)` for the full-sphere model.
pub fn resolve_grid_2d(grid: &Option<GridSpec>) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let spec = grid
        .as_ref()
        .ok_or_else(|| CliError::config("full_sphere model needs a grid with eta and phi"))?;
    let eta = spec
        .eta
        .as_ref()
        .ok_or_else(|| CliError::config("full_sphere grid needs an eta range"))?
        .points()?;
    let phi = spec
        .phi
        .as_ref()
        .ok_or_else(|| CliError::config("full_sphere grid needs a phi range"))?
        .points()?;
    Ok((eta, phi))
}

/// Build the estimation strategy described by a plan. For sweeps,
/// `longitude_override` replaces the configured true longitude.
pub fn build_strategy(
    plan: &PlanSpec,
    model: &ModelSpec,
    povm: &Option<PovmSpec>,
    grid: &Option<GridSpec>,
    longitude_override: Option<f64>,
) -> Result<Strategy, CliError> {
    let strategy = plan.strategy.expect("validated");
    match strategy {
        StrategySpec::TwoStage | StrategySpec::AdaptiveGeneral => {
            let eta = match model {
                ModelSpec::Example { eta } => *eta,
                _ => unreachable!("validated"),
            };
            let theta_true = match longitude_override.or(plan.theta_true) {
                Some(t) => t,
                None => return Err(CliError::config("strategy needs theta_true")),
            };
            if strategy == StrategySpec::TwoStage {
                return Ok(Strategy::TwoStageScalar { eta, theta_true });
            }
            let core_model = example_model(eta).map_err(CliError::numeric)?;
            let first_stage = match plan.first_stage.unwrap_or(FirstStageKind::ExampleXy) {
                FirstStageKind::ExampleXy => FirstStageSpec::ExampleXy { eta },
                FirstStageKind::GridMle => {
                    let povm_spec = povm.as_ref().ok_or_else(|| {
                        CliError::config("grid_mle first stage needs a povm section")
                    })?;
                    FirstStageSpec::GridMle {
                        povm: build_povm(povm_spec)?,
                        grid: resolve_grid_1d(grid)?,
                    }
                }
            };
            Ok(Strategy::AdaptiveGeneral {
                model: core_model,
                theta_true,
                first_stage,
            })
        }
        StrategySpec::TwoParamYz | StrategySpec::TwoParamXOnly => {
            let configured = plan.angles_true.expect("validated");
            let phi = longitude_override.unwrap_or(configured[1]);
            let angles =
                SphericalAngles::new(configured[0], phi).map_err(CliError::numeric)?;
            let scheme = if strategy == StrategySpec::TwoParamYz {
                TwoParamScheme::AlternateYz
            } else {
                TwoParamScheme::XOnly
            };
            Ok(Strategy::TwoParam { angles, scheme })
        }
    }
}
