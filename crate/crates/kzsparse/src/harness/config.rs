//! Experiment configuration: serde types mirrored by the TOML/JSON config
//! files, dotted-path overrides, validation with field paths, and step-size
//! resolution (`gamma = "auto"` and the sub-Gaussian preset).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{KzError, Result};
use crate::schedules::ScheduleRule;
use crate::sensing::NoiseModel;
use crate::solvers::subgaussian_step_preset;

pub const DEFAULT_CURVE_EPOCHS: usize = 200;
pub const DEFAULT_PHASE_EPOCHS: usize = 300;
pub const DEFAULT_TRIALS: usize = 30;
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-1;
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Hadamard,
    Bernoulli,
    Gaussian,
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixKind::Hadamard => "hadamard",
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hadamard" => Ok(MatrixKind::Hadamard),
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "gaussian" => Ok(MatrixKind::Gaussian),
            other => Err(format!(
                "unknown matrix kind '{}'; expected hadamard | bernoulli | gaussian",
                other
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    Kz,
    Iht,
    Kziht,
    Kzpt,
}

impl std::fmt::Display for SolverName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverName::Kz => "kz",
            SolverName::Iht => "iht",
            SolverName::Kziht => "kziht",
            SolverName::Kzpt => "kzpt",
        })
    }
}

impl std::str::FromStr for SolverName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kz" => Ok(SolverName::Kz),
            "iht" => Ok(SolverName::Iht),
            "kziht" => Ok(SolverName::Kziht),
            "kzpt" => Ok(SolverName::Kzpt),
            other => Err(format!(
                "unknown solver '{}'; expected kz | iht | kziht | kzpt",
                other
            )),
        }
    }
}

/// Step size: an explicit number or `"auto"`.
///
/// Auto resolves per solver: `gamma = 1` for plain KZ, `N/m` for KZIHT,
/// `N/period` for KZPT; IHT always uses its fixed `1/m` gradient step.
/// With `preset = "subgaussian"` on bernoulli/gaussian matrices, both
/// `gamma` and `lambda` come from the sub-Gaussian step-size preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Auto(AutoTag::Auto)
    }
}

impl std::str::FromStr for GammaSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(GammaSpec::Auto(AutoTag::Auto));
        }
        s.parse::<f64>()
            .map(GammaSpec::Value)
            .map_err(|_| format!("gamma must be a number or 'auto', got '{}'", s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Subgaussian,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub kind: MatrixKind,
    pub m: usize,
    #[serde(alias = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// Sparsity levels to run; curves and grids iterate over this list.
    pub s: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Gaussian,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub model: NoiseKind,
    #[serde(default)]
    pub sigma: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            model: NoiseKind::None,
            sigma: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn to_model(self) -> NoiseModel {
        match self.model {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Gaussian => NoiseModel::Gaussian { sigma: self.sigma },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub name: SolverName,
    #[serde(default = "default_rule")]
    pub rule: ScheduleRule,
    #[serde(default)]
    pub gamma: GammaSpec,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Thresholding period for KZPT; defaults to `m`.
    #[serde(default)]
    pub period: Option<usize>,
    /// Epoch budget; defaults to 200 for curves and 300 for phase grids.
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub target_error: f64,
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
    #[serde(default)]
    pub preset: Option<PresetName>,
    /// Sub-Gaussian norm bound K used by the preset. Not estimable from a
    /// realized matrix; supplied by the user, default 1.
    #[serde(default = "one")]
    pub k_subg: f64,
}

fn default_rule() -> ScheduleRule {
    ScheduleRule::Reshuffle
}

fn one() -> f64 {
    1.0
}

fn default_divergence() -> f64 {
    DEFAULT_DIVERGENCE_THRESHOLD
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_success_threshold() -> f64 {
    DEFAULT_SUCCESS_THRESHOLD
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub m_values: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_list: Vec<usize>,
    /// RIP-constant multiplier used for the rate-bound annotations.
    #[serde(default = "one")]
    pub c_rip: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub matrix: MatrixConfig,
    pub signal: SignalConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub solver: SolverConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub phase: Option<PhaseConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

/// Which command consumes the config; decides defaults and which optional
/// sections must be present.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Curve,
    Phase,
    Ablation,
    PeriodSweep,
}

impl ExperimentConfig {
    pub fn default_epochs(mode: RunMode) -> usize {
        match mode {
            RunMode::Phase => DEFAULT_PHASE_EPOCHS,
            _ => DEFAULT_CURVE_EPOCHS,
        }
    }

    /// Validates the config for a run mode; error messages name the
    /// offending field path.
    pub fn validate(&self, mode: RunMode) -> Result<()> {
        let err = |field: &str, msg: &str| {
            Err(KzError::Config(format!("{}: {}", field, msg)))
        };
        if self.trials < 1 {
            return err("trials", "must be at least 1");
        }
        if self.matrix.m < 1 {
            return err("matrix.m", "must be at least 1");
        }
        if self.matrix.n < 1 {
            return err("matrix.n", "must be at least 1");
        }
        if self.matrix.kind == MatrixKind::Hadamard {
            if !self.matrix.n.is_power_of_two() {
                return err("matrix.n", "must be a power of two for hadamard matrices");
            }
            if self.matrix.m > self.matrix.n {
                return err("matrix.m", "must not exceed matrix.n for hadamard matrices");
            }
        }
        if self.signal.s.is_empty() {
            return err("signal.s", "must list at least one sparsity level");
        }
        for &s in &self.signal.s {
            if s < 1 || s > self.matrix.n {
                return err("signal.s", "entries must satisfy 1 <= s <= matrix.n");
            }
        }
        if self.noise.sigma < 0.0 {
            return err("noise.sigma", "must be nonnegative");
        }
        if let GammaSpec::Value(g) = self.solver.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return err("solver.gamma", "must be positive and finite");
            }
        }
        if !(self.solver.lambda > 0.0 && self.solver.lambda.is_finite()) {
            return err("solver.lambda", "must be positive and finite");
        }
        if let Some(p) = self.solver.period {
            if p < 1 || p > self.matrix.m {
                return err("solver.period", "must satisfy 1 <= period <= matrix.m");
            }
        }
        if let Some(epochs) = self.solver.epochs {
            if epochs < 1 {
                return err("solver.epochs", "must be at least 1");
            }
        }
        if self.solver.target_error < 0.0 {
            return err("solver.target_error", "must be nonnegative");
        }
        if self.solver.divergence_threshold.is_nan() || self.solver.divergence_threshold <= 0.0 {
            return err("solver.divergence_threshold", "must be positive");
        }
        if !(self.solver.k_subg > 0.0 && self.solver.k_subg.is_finite()) {
            return err("solver.k_subg", "must be positive and finite");
        }
        if self.solver.preset == Some(PresetName::Subgaussian)
            && self.matrix.kind == MatrixKind::Hadamard
        {
            return err(
                "solver.preset",
                "the subgaussian preset applies to bernoulli or gaussian matrices",
            );
        }
        if self.success_threshold.is_nan() || self.success_threshold <= 0.0 {
            return err("success_threshold", "must be positive");
        }
        match mode {
            RunMode::Phase => {
                let phase = match &self.phase {
                    Some(p) => p,
                    None => return err("phase", "phase runs need a [phase] section"),
                };
                if phase.m_values.is_empty() {
                    return err("phase.m_values", "must list at least one row count");
                }
                for &m in &phase.m_values {
                    if m < 1 {
                        return err("phase.m_values", "entries must be at least 1");
                    }
                    if self.matrix.kind == MatrixKind::Hadamard && m > self.matrix.n {
                        return err("phase.m_values", "entries must not exceed matrix.n");
                    }
                }
            }
            RunMode::PeriodSweep => {
                if self.solver.name != SolverName::Kzpt {
                    return err("solver.name", "period sweeps run the kzpt solver");
                }
                let sweep = match &self.sweep {
                    Some(s) => s,
                    None => return err("sweep", "period sweeps need a [sweep] section"),
                };
                if sweep.p_list.is_empty() {
                    return err("sweep.p_list", "must list at least one period");
                }
                for &p in &sweep.p_list {
                    if p < 1 || p > self.matrix.m {
                        return err("sweep.p_list", "entries must satisfy 1 <= p <= matrix.m");
                    }
                }
                if !(sweep.c_rip > 0.0 && sweep.c_rip.is_finite()) {
                    return err("sweep.c_rip", "must be positive and finite");
                }
            }
            RunMode::Ablation => {
                if self.solver.name != SolverName::Kziht {
                    return err("solver.name", "schedule ablations run the kziht solver");
                }
            }
            RunMode::Curve => {}
        }
        Ok(())
    }
}

/// Solver settings with every knob resolved to a number.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResolvedSolver {
    pub name: SolverName,
    pub rule: ScheduleRule,
    pub gamma: f64,
    pub lambda: f64,
    pub period: usize,
    pub epochs: usize,
    pub target_error: f64,
    pub divergence_threshold: f64,
}

/// Resolves `gamma = "auto"`, the preset, the default period and the
/// default epoch budget against concrete dimensions.
pub fn resolve_solver(config: &ExperimentConfig, mode: RunMode, m: usize) -> Result<ResolvedSolver> {
    let n = config.matrix.n;
    let solver = &config.solver;
    let period = solver.period.unwrap_or(m).min(m);
    let epochs = solver
        .epochs
        .unwrap_or_else(|| ExperimentConfig::default_epochs(mode));
    let (gamma, lambda) = if solver.preset == Some(PresetName::Subgaussian) {
        let s_max = config.signal.s.iter().copied().max().unwrap_or(1);
        let preset = subgaussian_step_preset(m, n, s_max, solver.k_subg, 1.0)?;
        (preset.gamma, preset.lambda)
    } else {
        let gamma = match solver.gamma {
            GammaSpec::Value(g) => g,
            GammaSpec::Auto(_) => match solver.name {
                SolverName::Kz => 1.0,
                SolverName::Iht => 1.0,
                SolverName::Kziht => n as f64 / m as f64,
                SolverName::Kzpt => n as f64 / period as f64,
            },
        };
        (gamma, solver.lambda)
    };
    Ok(ResolvedSolver {
        name: solver.name,
        rule: solver.rule,
        gamma,
        lambda,
        period,
        epochs,
        target_error: solver.target_error,
        divergence_threshold: solver.divergence_threshold,
    })
}

/// Loads a config from `.toml` or `.json`, applying `key=value` overrides
/// (dotted paths, values parsed as JSON scalars with a string fallback).
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KzError::Config(format!("cannot read {}: {}", path.display(), e)))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    config_from_str(&text, is_json, overrides)
}

pub fn config_from_str(
    text: &str,
    is_json: bool,
    overrides: &[String],
) -> Result<ExperimentConfig> {
    let mut value: serde_json::Value = if is_json {
        serde_json::from_str(text).map_err(|e| KzError::Config(format!("config: {}", e)))?
    } else {
        let toml_value: toml::Value =
            toml::from_str(text).map_err(|e| KzError::Config(format!("config: {}", e)))?;
        serde_json::to_value(toml_value).map_err(|e| KzError::Config(format!("config: {}", e)))?
    };
    apply_overrides(&mut value, overrides)?;
    serde_json::from_value(value).map_err(|e| KzError::Config(format!("config: {}", e)))
}

/// Applies `path.to.field=value` overrides onto a JSON config tree.
/// Intermediate objects must already exist; the final deserialization
/// rejects names that match no field.
pub fn apply_overrides(value: &mut serde_json::Value, overrides: &[String]) -> Result<()> {
    for entry in overrides {
        let (path, raw) = entry.split_once('=').ok_or_else(|| {
            KzError::Config(format!("override '{}' is not of the form path=value", entry))
        })?;
        let parsed: serde_json::Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(_) => serde_json::Value::String(raw.to_string()),
        };
        let segments: Vec<&str> = path.split('.').collect();
        if segments.iter().any(|s| s.is_empty()) {
            return Err(KzError::Config(format!("override path '{}' has empty segments", path)));
        }
        let (last, parents) = segments.split_last().expect("split checked non-empty");
        let mut cursor = &mut *value;
        for segment in parents {
            let obj = match cursor.as_object_mut() {
                Some(obj) => obj,
                None => {
                    return Err(KzError::Config(format!(
                        "override path '{}' does not traverse objects at '{}'",
                        path, segment
                    )))
                }
            };
            cursor = obj
                .entry(segment.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
        match cursor.as_object_mut() {
            Some(obj) => obj.insert(last.to_string(), parsed),
            None => {
                return Err(KzError::Config(format!(
                    "override path '{}' does not traverse objects at '{}'",
                    path, last
                )))
            }
        };
    }
    Ok(())
}
