//! Layered network configuration, association rules and validation.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::{Environment, FadingParams, LinkProfile, LosModel, PathlossParams};
use crate::error::{Error, Result, ValidationIssue};

/// One layer of nodes at a common altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    /// m
    pub altitude: f64,
    /// receivers per m²
    pub density_rx: f64,
    /// transmitters per m²
    pub density_tx: f64,
    /// W
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default = "one")]
    pub bias: f64,
}

fn one() -> f64 {
    1.0
}

impl LayerSpec {
    pub fn new(altitude: f64, density_rx: f64, density_tx: f64) -> Self {
        Self {
            altitude,
            density_rx,
            density_tx,
            power: 1.0,
            bias: 1.0,
        }
    }

    /// λ_k = λ_{k,Rx} + λ_{k,Tx}.
    pub fn total_density(&self) -> f64 {
        self.density_rx + self.density_tx
    }
}

/// Which side of a link performs the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// A receiver picks among transmitters.
    Receiver,
    /// A transmitter picks among receivers.
    Transmitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Nearest,
    Strongest,
}

/// Association rule `τ = oa`, written as two letters: `rn`, `rs`, `tn`, `ts`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssociationRule {
    pub orientation: Orientation,
    pub criterion: Criterion,
}

impl AssociationRule {
    pub const RN: Self = Self::new(Orientation::Receiver, Criterion::Nearest);
    pub const RS: Self = Self::new(Orientation::Receiver, Criterion::Strongest);
    pub const TN: Self = Self::new(Orientation::Transmitter, Criterion::Nearest);
    pub const TS: Self = Self::new(Orientation::Transmitter, Criterion::Strongest);

    pub const fn new(orientation: Orientation, criterion: Criterion) -> Self {
        Self {
            orientation,
            criterion,
        }
    }

    pub fn is_receiver_oriented(&self) -> bool {
        self.orientation == Orientation::Receiver
    }
}

impl fmt::Display for AssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orientation {
            Orientation::Receiver => 'r',
            Orientation::Transmitter => 't',
        };
        let a = match self.criterion {
            Criterion::Nearest => 'n',
            Criterion::Strongest => 's',
        };
        write!(f, "{o}{a}")
    }
}

impl FromStr for AssociationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rn" => Ok(Self::RN),
            "rs" => Ok(Self::RS),
            "tn" => Ok(Self::TN),
            "ts" => Ok(Self::TS),
            other => Err(Error::Parse(format!(
                "unknown association rule '{other}' (expected rn, rs, tn or ts)"
            ))),
        }
    }
}

impl Serialize for AssociationRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AssociationRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Full description of a layered network. `target_sinr[i][j]` is the target
/// for an `i`-layer receiver served by a `j`-layer transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: Vec<LayerSpec>,
    pub environment: Environment,
    pub los_model: LosModel,
    pub pathloss: PathlossParams,
    pub fading: FadingParams,
    /// W
    pub noise_power: f64,
    pub target_sinr: Vec<Vec<f64>>,
}

impl NetworkConfig {
    /// Default channel parameters, no noise and a uniform target SINR.
    pub fn with_layers(layers: Vec<LayerSpec>, beta: f64) -> Self {
        let k = layers.len();
        Self {
            layers,
            environment: Environment::default(),
            los_model: LosModel::Approximate,
            pathloss: PathlossParams::default(),
            fading: FadingParams::default(),
            noise_power: 0.0,
            target_sinr: vec![vec![beta; k]; k],
        }
    }

    pub fn set_uniform_beta(&mut self, beta: f64) {
        let k = self.layers.len();
        self.target_sinr = vec![vec![beta; k]; k];
    }

    fn issues(&self) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        out.extend(self.environment.issues());
        out.extend(self.pathloss.issues());
        out.extend(self.fading.issues());
        if let LosModel::Constant(p) = self.los_model {
            if !(0.0..=1.0).contains(&p) {
                out.push(ValidationIssue::global("environment.los_constant", "must lie in [0, 1]"));
            }
        }
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            out.push(ValidationIssue::global("noise_power", "must be finite and >= 0"));
        }
        if self.layers.is_empty() {
            out.push(ValidationIssue::global("layers", "no layers"));
            return out;
        }
        let ground_anywhere = self.layers.iter().any(|l| l.altitude == 0.0);
        for (k, l) in self.layers.iter().enumerate() {
            if !(l.altitude >= 0.0) || !l.altitude.is_finite() {
                out.push(ValidationIssue::layer(k, "altitude", "must be finite and >= 0"));
            }
            if k == 0 && ground_anywhere && l.altitude != 0.0 {
                out.push(ValidationIssue::layer(
                    0,
                    "altitude",
                    "a ground layer must be listed first",
                ));
            }
            for (name, v) in [("density_rx", l.density_rx), ("density_tx", l.density_tx)] {
                if !(v >= 0.0) || !v.is_finite() {
                    out.push(ValidationIssue::layer(k, name, "must be finite and >= 0"));
                }
            }
            if !(l.power > 0.0) || !l.power.is_finite() {
                out.push(ValidationIssue::layer(k, "power", "must be finite and > 0"));
            }
            if !(l.bias > 0.0) || !l.bias.is_finite() {
                out.push(ValidationIssue::layer(k, "bias", "must be finite and > 0"));
            }
        }
        if !self.layers.iter().any(|l| l.density_tx > 0.0) {
            out.push(ValidationIssue::global("layers", "no layer has a positive transmitter density"));
        }
        if !self.layers.iter().any(|l| l.density_rx > 0.0) {
            out.push(ValidationIssue::global("layers", "no layer has a positive receiver density"));
        }
        let k = self.layers.len();
        if self.target_sinr.len() != k || self.target_sinr.iter().any(|row| row.len() != k) {
            out.push(ValidationIssue::global(
                "targets.beta_matrix",
                format!("must be a {k}x{k} matrix"),
            ));
        } else {
            for (i, row) in self.target_sinr.iter().enumerate() {
                for (j, &b) in row.iter().enumerate() {
                    if !(b > 0.0) || !b.is_finite() {
                        out.push(ValidationIssue::global(
                            format!("targets.beta_matrix[{i}][{j}]"),
                            "must be finite and > 0",
                        ));
                    }
                }
            }
        }
        out
    }
}

/// A configuration that passed [`validate`]; immutable, cheap to clone and
/// carrying one precomputed [`LinkProfile`] per layer pair.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    config: Arc<NetworkConfig>,
    profiles: Arc<Vec<Vec<LinkProfile>>>,
}

impl std::ops::Deref for ValidatedConfig {
    type Target = NetworkConfig;

    fn deref(&self) -> &NetworkConfig {
        &self.config
    }
}

impl PartialEq for ValidatedConfig {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
    }
}

impl ValidatedConfig {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn num_layers(&self) -> usize {
        self.config.layers.len()
    }

    pub fn layer(&self, k: usize) -> &LayerSpec {
        &self.config.layers[k]
    }

    /// `h_ij = |h_i − h_j|`.
    pub fn altitude_gap(&self, i: usize, j: usize) -> f64 {
        (self.config.layers[i].altitude - self.config.layers[j].altitude).abs()
    }

    /// Channel profile between an `rx`-layer receiver and a `tx`-layer
    /// transmitter.
    pub fn profile(&self, rx: usize, tx: usize) -> &LinkProfile {
        &self.profiles[rx][tx]
    }

    pub fn beta(&self, rx: usize, tx: usize) -> f64 {
        self.config.target_sinr[rx][tx]
    }
}

/// Checks every invariant and returns either the validated configuration or
/// the complete list of violations.
pub fn validate(config: &NetworkConfig) -> Result<ValidatedConfig> {
    let mut issues = config.issues();
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    let k = config.layers.len();
    let mut profiles = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            match LinkProfile::new(
                &config.environment,
                config.los_model,
                config.layers[i].altitude,
                config.layers[j].altitude,
            ) {
                Ok(p) => row.push(p),
                Err(e) => {
                    issues.push(ValidationIssue::layer(j, "altitude", e.to_string()));
                    row.push(LinkProfile::new(&config.environment, LosModel::Constant(0.0), 0.0, 0.0)?);
                }
            }
        }
        profiles.push(row);
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    Ok(ValidatedConfig {
        config: Arc::new(config.clone()),
        profiles: Arc::new(profiles),
    })
}

/// Per-layer density of the point process the selecting node chooses from:
/// transmitters for receiver-oriented rules, receivers otherwise.
pub fn orientation_set(config: &NetworkConfig, rule: AssociationRule) -> Vec<f64> {
    config
        .layers
        .iter()
        .map(|l| match rule.orientation {
            Orientation::Receiver => l.density_tx,
            Orientation::Transmitter => l.density_rx,
        })
        .collect()
}

/// Density that weights layer `k` in network averages and the ASE:
/// receivers for receiver-oriented rules, transmitters otherwise.
pub fn weight_density(config: &NetworkConfig, rule: AssociationRule, k: usize) -> f64 {
    match rule.orientation {
        Orientation::Receiver => config.layers[k].density_rx,
        Orientation::Transmitter => config.layers[k].density_tx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_ii() -> NetworkConfig {
        NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(100.0, 0.0, 1e-5)],
            0.7,
        )
    }

    fn messages(e: Error) -> Vec<String> {
        match e {
            Error::Invalid(v) => v.into_iter().map(|i| i.message).collect(),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn table_ii_is_valid() {
        let v = validate(&table_ii()).unwrap();
        assert_eq!(v.num_layers(), 2);
        assert_eq!(v.altitude_gap(0, 1), 100.0);
        assert_eq!(v.beta(0, 1), 0.7);
    }

    #[test]
    fn alpha_below_two() {
        let mut c = table_ii();
        c.pathloss.alpha_los = 1.5;
        assert!(messages(validate(&c).unwrap_err()).contains(&"alpha_los below 2".to_string()));
    }

    #[test]
    fn empty_layers() {
        let c = NetworkConfig::with_layers(vec![], 0.7);
        assert!(messages(validate(&c).unwrap_err()).contains(&"no layers".to_string()));
    }

    #[test]
    fn all_issues_reported_with_layer_index() {
        let mut c = table_ii();
        c.layers[1].power = -1.0;
        c.layers[1].density_tx = f64::NAN;
        c.noise_power = -1.0;
        let Error::Invalid(issues) = validate(&c).unwrap_err() else {
            panic!()
        };
        let rendered: Vec<String> = issues.iter().map(ToString::to_string).collect();
        assert!(rendered.iter().any(|s| s.starts_with("layers[1].power")));
        assert!(rendered.iter().any(|s| s.starts_with("layers[1].density_tx")));
        assert!(rendered.iter().any(|s| s.starts_with("noise_power")));
    }

    #[test]
    fn ground_layer_must_come_first() {
        let c = NetworkConfig::with_layers(
            vec![LayerSpec::new(100.0, 0.0, 1e-5), LayerSpec::new(0.0, 1e-5, 0.0)],
            0.7,
        );
        assert!(validate(&c).is_err());
        let aerial_only = NetworkConfig::with_layers(vec![LayerSpec::new(100.0, 1e-5, 1e-5)], 0.7);
        assert!(validate(&aerial_only).is_ok());
    }

    #[test]
    fn orientation_targets() {
        let c = table_ii();
        assert_eq!(orientation_set(&c, AssociationRule::RS), vec![0.0, 1e-5]);
        assert_eq!(orientation_set(&c, AssociationRule::TS), vec![1e-5, 0.0]);
    }

    #[test]
    fn rule_round_trip() {
        for s in ["rn", "rs", "tn", "ts"] {
            assert_eq!(s.parse::<AssociationRule>().unwrap().to_string(), s);
        }
        assert!("xx".parse::<AssociationRule>().is_err());
    }

    #[test]
    fn validation_is_idempotent_and_preserves_densities() {
        let c = table_ii();
        let v1 = validate(&c).unwrap();
        let v2 = validate(v1.config()).unwrap();
        assert_eq!(v1, v2);
        for (a, b) in c.layers.iter().zip(v2.layers.iter()) {
            assert_eq!(a.total_density(), b.total_density());
        }
    }
}
