//! Transmitter-density design: the ε integral, upper bounds on the optimal
//! density, bounded grid search and two-layer split sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelClass;
use crate::error::{Error, Result};
use crate::network::{validate, AssociationRule, NetworkConfig, ValidatedConfig};
use crate::numerics::integrate_power_tail;
use crate::performance::{layer_ase, layer_stp, network_aggregate};
use crate::settings::EvalSettings;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Stp,
    Ase,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Stp => "stp",
            Objective::Ase => "ase",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stp" => Ok(Objective::Stp),
            "ase" => Ok(Objective::Ase),
            _ => Err(Error::Parse(format!("unknown objective '{s}' (expected stp or ase)"))),
        }
    }
}

/// `ε_ij = ∫_{h_ij}^∞ x(1 − ρ^L/(1 + a_L) − ρ^N/(1 + a_N)) dx` with
/// `a_c = β_ij h_ij^{α_L} x^{−α_c}`; `i` receives, `j` transmits.
///
/// The integrand is evaluated as `x(ρ^L a_L/(1+a_L) + ρ^N a_N/(1+a_N))`,
/// which avoids cancellation in the tail.
pub fn epsilon(config: &ValidatedConfig, i: usize, j: usize, settings: &EvalSettings) -> Result<f64> {
    let h = config.altitude_gap(i, j);
    if h == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "layers {i} and {j} share an altitude, so the bound is uninformative"
        )));
    }
    let beta = config.beta(i, j);
    let pl = config.pathloss;
    let scale = beta * h.powf(pl.alpha_los);
    let profile = *config.profile(i, j);
    let integrand = |x: f64| {
        let mut v = 0.0;
        for c in ChannelClass::ALL {
            let a = scale * x.powf(-pl.alpha(c));
            let rho = profile.prob(c, x);
            if rho > 0.0 {
                v += rho * a / (1.0 + a);
            }
        }
        x * v
    };
    let pivot = h.max(scale.powf(1.0 / pl.alpha_los));
    integrate_power_tail(integrand, h, pivot, &settings.inner)
}

/// Upper bounds on the optimal density of transmitter layer `j` for the STP
/// and the ASE of layer `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBound {
    pub layer: usize,
    pub tx_layer: usize,
    pub bound_stp: f64,
    pub bound_ase: f64,
    /// `ε` used for the receiver-oriented bounds, when it applies.
    pub epsilon: Option<f64>,
    pub reason_stp: &'static str,
    pub reason_ase: &'static str,
}

impl DensityBound {
    pub fn bound(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Stp => self.bound_stp,
            Objective::Ase => self.bound_ase,
        }
    }

    pub fn reason(&self, objective: Objective) -> &'static str {
        match objective {
            Objective::Stp => self.reason_stp,
            Objective::Ase => self.reason_ase,
        }
    }
}

/// `1/(2πε)` with its reason code; `ε = 0` and same-altitude pairs give `+∞`.
fn reciprocal_bound(config: &ValidatedConfig, rx: usize, tx: usize, settings: &EvalSettings) -> Result<(f64, Option<f64>, &'static str)> {
    match epsilon(config, rx, tx, settings) {
        // ε that underflows to a subnormal has no finite reciprocal either.
        Ok(e) if (1.0 / (TWO_PI * e)).is_finite() => Ok((1.0 / (TWO_PI * e), Some(e), "reciprocal of epsilon")),
        Ok(e) => Ok((f64::INFINITY, Some(e), "epsilon zero")),
        Err(Error::DegenerateGeometry(msg)) => {
            log::warn!("{msg}");
            Ok((f64::INFINITY, None, "same-altitude pair"))
        }
        Err(e) => Err(e),
    }
}

pub fn density_upper_bound(
    config: &ValidatedConfig,
    rule: AssociationRule,
    k: usize,
    j: usize,
    settings: &EvalSettings,
) -> Result<DensityBound> {
    if config.fading.m_los != 1 || config.fading.m_nlos != 1 {
        return Err(Error::PreconditionViolated(
            "density bounds hold for Rayleigh fading only (m_los = m_nlos = 1)".into(),
        ));
    }
    let n = config.num_layers();
    if k >= n || j >= n {
        return Err(Error::Domain(format!("layers ({k}, {j}) out of range for {n} layers")));
    }
    if rule.is_receiver_oriented() {
        let (b, eps, reason) = reciprocal_bound(config, k, j, settings)?;
        return Ok(DensityBound {
            layer: k,
            tx_layer: j,
            bound_stp: b,
            bound_ase: b,
            epsilon: eps,
            reason_stp: reason,
            reason_ase: reason,
        });
    }
    let (bound_ase, epsilon, reason_ase) = if k != j {
        (0.0, None, "monotone decreasing")
    } else {
        let mut best: Option<(f64, Option<f64>, &'static str)> = None;
        for i in (0..n).filter(|&i| config.layer(i).density_rx > 0.0) {
            let cand = reciprocal_bound(config, i, k, settings)?;
            if best.is_none_or(|b| cand.0 > b.0) {
                best = Some(cand);
            }
        }
        best.ok_or_else(|| Error::Domain("no receiver layer for a transmitter-oriented bound".into()))?
    };
    Ok(DensityBound {
        layer: k,
        tx_layer: j,
        bound_stp: 0.0,
        bound_ase,
        epsilon,
        reason_stp: "monotone decreasing",
        reason_ase,
    })
}

/// `per_decade` log-spaced points per decade over `[min, max]`, both ends
/// included.
pub fn log_grid(min: f64, max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || !max.is_finite() || per_decade == 0 {
        return Err(Error::Domain(format!(
            "log grid needs 0 < min <= max < inf and points per decade >= 1 (min={min}, max={max})"
        )));
    }
    let decades = (max / min).log10();
    let steps = (decades * per_decade as f64).ceil().max(1.0) as usize;
    if max == min {
        return Ok(vec![min]);
    }
    Ok((0..=steps)
        .map(|s| {
            if s == steps {
                max
            } else {
                min * 10f64.powf(decades * s as f64 / steps as f64)
            }
        })
        .collect())
}

/// 25 points per decade over `[1e-8, min(bound, 1e-3)]`.
pub fn default_density_grid(bound: f64) -> Result<Vec<f64>> {
    let top = if bound.is_finite() { bound.clamp(1e-8, 1e-3) } else { 1e-3 };
    log_grid(1e-8, top, 25)
}

fn evaluate(config: &ValidatedConfig, rule: AssociationRule, k: usize, objective: Objective, settings: &EvalSettings) -> Result<f64> {
    match objective {
        Objective::Stp => layer_stp(config, rule, k, settings),
        Objective::Ase => layer_ase(config, rule, k, settings),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySearch {
    pub density: f64,
    pub value: f64,
    pub ceiling: f64,
    /// `(density, objective)` for every searched point, ascending.
    pub evaluated: Vec<(f64, f64)>,
}

/// Exhaustive search of `λ_{j,Tx}` over the grid points not above `ceiling`.
/// Ties go to the smaller density. A ceiling below the whole grid leaves only
/// its smallest point.
pub fn optimize_density(
    config: &NetworkConfig,
    rule: AssociationRule,
    k: usize,
    j: usize,
    objective: Objective,
    grid: &[f64],
    ceiling: f64,
    settings: &EvalSettings,
) -> Result<DensitySearch> {
    if grid.is_empty() {
        return Err(Error::Domain("density grid is empty".into()));
    }
    if j >= config.layers.len() {
        return Err(Error::Domain(format!("layer {j} does not exist")));
    }
    let mut points: Vec<f64> = grid.to_vec();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let lowest = points[0];
    points.retain(|&d| d <= ceiling);
    if points.is_empty() {
        points.push(lowest);
    }
    let evaluated: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&d| {
            let mut c = config.clone();
            c.layers[j].density_tx = d;
            let v = evaluate(&validate(&c)?, rule, k, objective, settings)?;
            Ok((d, v))
        })
        .collect::<Result<_>>()?;
    let mut best = evaluated[0];
    for &p in &evaluated[1..] {
        if p.1 > best.1 {
            best = p;
        }
    }
    Ok(DensitySearch {
        density: best.0,
        value: best.1,
        ceiling,
        evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSweepResult {
    pub total_density: f64,
    pub objective: Objective,
    /// `ρ = λ_j / λ_T`.
    pub ratios: Vec<f64>,
    pub values: Vec<f64>,
    /// Min-max normalised values; all zero when the curve is flat.
    pub normalized: Vec<f64>,
    pub argmax: usize,
}

impl SplitSweepResult {
    pub fn argmax_ratio(&self) -> f64 {
        self.ratios[self.argmax]
    }
}

/// Network objective with `λ_j = ρλ_T` and `λ_k = (1 − ρ)λ_T`; STP is the
/// density-weighted network STP and ASE the summed network ASE.
pub fn two_layer_split(
    template: &NetworkConfig,
    rule: AssociationRule,
    j: usize,
    k: usize,
    total_density: f64,
    ratios: &[f64],
    objective: Objective,
    settings: &EvalSettings,
) -> Result<SplitSweepResult> {
    let n = template.layers.len();
    if j >= n || k >= n || j == k {
        return Err(Error::Domain(format!("split needs two distinct layers, got ({j}, {k})")));
    }
    if !(total_density > 0.0) || !total_density.is_finite() {
        return Err(Error::Domain(format!("total density must be positive, got {total_density}")));
    }
    if ratios.is_empty() || ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Domain("split ratios must be a non-empty subset of [0, 1]".into()));
    }
    let values: Vec<f64> = ratios
        .par_iter()
        .map(|&r| {
            let mut c = template.clone();
            c.layers[j].density_tx = r * total_density;
            c.layers[k].density_tx = (1.0 - r) * total_density;
            let report = network_aggregate(&validate(&c)?, rule, settings)?;
            Ok(match objective {
                Objective::Stp => report.network_stp,
                Objective::Ase => report.network_ase,
            })
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let normalized = values
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect();
    let mut argmax = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[argmax] {
            argmax = i;
        }
    }
    Ok(SplitSweepResult {
        total_density,
        objective,
        ratios: ratios.to_vec(),
        values,
        normalized,
        argmax,
    })
}
