//! Scenario files: one network, one association rule, evaluation settings
//! and simulation defaults.
//!
//! ```toml
//! schema_version = 1
//! rule = "rs"
//!
//! [channel]
//! los_model = "approximate"   # or "exact", "constant" (with los_constant)
//! noise_power = 0.0
//!
//! [targets]
//! beta = 0.7                  # or beta_matrix = [[...], ...]
//!
//! [[layers]]
//! altitude = 0.0
//! density_rx = 1e-5
//! density_tx = 0.0
//! ```
//!
//! `[environment]`, `[pathloss]`, `[fading]`, `[evaluation]` and
//! `[simulation]` are optional and default to the reference parameters.

use std::path::Path;

use serde::Deserialize;

use aerialnet::channel::{Environment, FadingParams, LosModel, PathlossParams};
use aerialnet::network::{validate, AssociationRule, LayerSpec, NetworkConfig, ValidatedConfig};
use aerialnet::settings::EvalSettings;

use crate::failure::{decode, Failure};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LosKind {
    Approximate,
    Exact,
    Constant,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChannelSection {
    los_model: LosKind,
    los_constant: Option<f64>,
    /// W
    noise_power: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            los_model: LosKind::Approximate,
            los_constant: None,
            noise_power: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsSection {
    beta: Option<f64>,
    beta_matrix: Option<Vec<Vec<f64>>>,
}

/// Simulation defaults; command-line flags override them.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub trials: usize,
    pub seed: u64,
    /// Largest accepted |analytic − empirical| STP gap.
    pub tolerance: f64,
    /// m; the default window is used when absent.
    pub window_radius: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            trials: 20_000,
            seed: 1,
            tolerance: 0.03,
            window_radius: None,
        }
    }
}

impl SimulationSection {
    fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.trials == 0 {
            out.push("simulation.trials: must be >= 1".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            out.push("simulation.tolerance: must lie in (0, 1)".into());
        }
        if let Some(r) = self.window_radius {
            if !(r > 0.0) || !r.is_finite() {
                out.push("simulation.window_radius: must be finite and > 0".into());
            }
        }
        out
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    rule: AssociationRule,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    environment: Environment,
    #[serde(default)]
    pathloss: PathlossParams,
    #[serde(default)]
    fading: FadingParams,
    targets: TargetsSection,
    layers: Vec<LayerSpec>,
    #[serde(default)]
    evaluation: EvalSettings,
    #[serde(default)]
    simulation: SimulationSection,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub rule: AssociationRule,
    pub network: NetworkConfig,
    pub config: ValidatedConfig,
    pub settings: EvalSettings,
    pub simulation: SimulationSection,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Runtime(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses `text`; every invariant violation is collected before failing.
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let file: ScenarioFile = decode(text, origin)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Failure::Parse(format!(
                "{origin}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let mut issues = Vec::new();
        let los_model = match (file.channel.los_model, file.channel.los_constant) {
            (LosKind::Approximate, None) => LosModel::Approximate,
            (LosKind::Exact, None) => LosModel::Exact,
            (LosKind::Constant, Some(p)) => LosModel::Constant(p),
            (LosKind::Constant, None) => {
                issues.push("channel.los_constant: required when los_model = \"constant\"".to_string());
                LosModel::Approximate
            }
            (_, Some(_)) => {
                issues.push("channel.los_constant: only allowed when los_model = \"constant\"".to_string());
                LosModel::Approximate
            }
        };
        let k = file.layers.len();
        let target_sinr = match (file.targets.beta, file.targets.beta_matrix) {
            (Some(b), None) => vec![vec![b; k]; k],
            (None, Some(m)) => m,
            _ => {
                issues.push("targets: give exactly one of beta and beta_matrix".to_string());
                vec![vec![1.0; k]; k]
            }
        };
        let network = NetworkConfig {
            layers: file.layers,
            environment: file.environment,
            los_model,
            pathloss: file.pathloss,
            fading: file.fading,
            noise_power: file.channel.noise_power,
            target_sinr,
        };
        if let Err(e) = file.evaluation.validate() {
            issues.push(format!("evaluation: {e}"));
        }
        issues.extend(file.simulation.issues());
        let config = match validate(&network) {
            Ok(c) => Some(c),
            Err(aerialnet::error::Error::Invalid(list)) => {
                issues.extend(list.iter().map(ToString::to_string));
                None
            }
            Err(e) => {
                issues.push(e.to_string());
                None
            }
        };
        match config {
            Some(config) if issues.is_empty() => Ok(Self {
                rule: file.rule,
                network,
                config,
                settings: file.evaluation,
                simulation: file.simulation,
            }),
            _ => Err(Failure::Invalid(issues)),
        }
    }

    /// Layers whose nodes are typical under the scenario's rule.
    pub fn typical_layers(&self) -> Vec<usize> {
        (0..self.config.num_layers())
            .filter(|&k| aerialnet::network::weight_density(&self.config, self.rule, k) > 0.0)
            .collect()
    }
}
