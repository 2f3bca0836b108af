//! Line-of-sight probability models, pathloss exponents and Nakagami-m fading
//! for ground-to-ground, air-to-ground and air-to-air links.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationIssue};
use crate::numerics::{gaussian_q, integrate, QuadratureSpec};

/// Building statistics and sigmoid fit of the propagation environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    /// Fraction of land covered by buildings.
    pub mu: f64,
    /// Buildings per m².
    pub nu: f64,
    /// Mean building height, m.
    pub xi: f64,
    /// Sigmoid offset (degrees).
    pub iota: f64,
    /// Sigmoid slope (1/degree).
    pub kappa: f64,
}

impl Default for Environment {
    /// Dense-urban values.
    fn default() -> Self {
        Self {
            mu: 0.5,
            nu: 3e-4,
            xi: 20.0,
            iota: 12.0910,
            kappa: 0.1139,
        }
    }
}

impl Environment {
    pub fn issues(&self) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.mu) {
            out.push(ValidationIssue::global("environment.mu", "must lie in [0, 1]"));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            out.push(ValidationIssue::global("environment.nu", "must be finite and >= 0"));
        }
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            out.push(ValidationIssue::global("environment.xi", "must be finite and > 0"));
        }
        if !self.iota.is_finite() {
            out.push(ValidationIssue::global("environment.iota", "must be finite"));
        }
        if !self.kappa.is_finite() {
            out.push(ValidationIssue::global("environment.kappa", "must be finite"));
        }
        out
    }

    fn sqrt_mu_nu(&self) -> f64 {
        (self.mu * self.nu).sqrt()
    }

    /// Sigmoid value as the elevation angle goes to zero.
    pub fn sigmoid_floor(&self) -> f64 {
        1.0 / (1.0 + self.iota * (self.kappa * self.iota).exp())
    }
}

/// Which LoS probability model the dispatcher uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    /// Sigmoid for air-to-ground, exponential for air-to-air, 0 on the ground.
    Approximate,
    /// Finite-product building model for every pair.
    Exact,
    /// Fixed LoS probability for every pair.
    Constant(f64),
}

impl Default for LosModel {
    fn default() -> Self {
        LosModel::Approximate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlossParams {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl Default for PathlossParams {
    fn default() -> Self {
        Self {
            alpha_los: 2.5,
            alpha_nlos: 3.5,
        }
    }
}

impl PathlossParams {
    pub fn alpha(&self, class: ChannelClass) -> f64 {
        match class {
            ChannelClass::Los => self.alpha_los,
            ChannelClass::Nlos => self.alpha_nlos,
        }
    }

    pub fn issues(&self) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        if !(self.alpha_los >= 2.0) {
            out.push(ValidationIssue::global("pathloss.alpha_los", "alpha_los below 2"));
        }
        if !self.alpha_nlos.is_finite() || !(self.alpha_nlos >= self.alpha_los) {
            out.push(ValidationIssue::global(
                "pathloss.alpha_nlos",
                "alpha_nlos must be finite and >= alpha_los",
            ));
        }
        out
    }
}

/// Nakagami shapes. NLoS links are Rayleigh (`m_nlos = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingParams {
    pub m_los: u32,
    pub m_nlos: u32,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self { m_los: 1, m_nlos: 1 }
    }
}

impl FadingParams {
    pub fn m(&self, class: ChannelClass) -> u32 {
        match class {
            ChannelClass::Los => self.m_los,
            ChannelClass::Nlos => self.m_nlos,
        }
    }

    pub fn is_rayleigh(&self) -> bool {
        self.m_los == 1 && self.m_nlos == 1
    }

    pub fn issues(&self) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        if self.m_los < 1 {
            out.push(ValidationIssue::global("fading.m_los", "must be >= 1"));
        }
        if self.m_nlos != 1 {
            out.push(ValidationIssue::global("fading.m_nlos", "must equal 1"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelClass {
    Los,
    Nlos,
}

impl ChannelClass {
    pub const ALL: [ChannelClass; 2] = [ChannelClass::Los, ChannelClass::Nlos];

    pub fn index(self) -> usize {
        match self {
            ChannelClass::Los => 0,
            ChannelClass::Nlos => 1,
        }
    }
}

impl fmt::Display for ChannelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelClass::Los => "L",
            ChannelClass::Nlos => "N",
        })
    }
}

/// Slack allowed on `x ≥ h_ij` for distances produced by floating-point
/// geometry.
fn check_distance(h_rx: f64, h_tx: f64, x: f64) -> Result<f64> {
    let h = (h_rx - h_tx).abs();
    if !x.is_finite() || x < h * (1.0 - 1e-12) - 1e-12 || h_rx < 0.0 || h_tx < 0.0 {
        return Err(Error::Domain(format!(
            "link distance {x} shorter than altitude difference {h} (h_rx={h_rx}, h_tx={h_tx})"
        )));
    }
    Ok(x.max(h))
}

/// Above this many building rows the product is replaced by its midpoint
/// integral.
const EXACT_PRODUCT_LIMIT: i64 = 20_000;

fn exact_log_product(env: &Environment, h_rx: f64, h_tx: f64, x: f64) -> f64 {
    let h_ij = (h_rx - h_tx).abs();
    let h_max = h_rx.max(h_tx);
    let m = (((x * x - h_ij * h_ij).max(0.0) * env.mu * env.nu).sqrt() - 1.0).floor() as i64;
    if m < 0 {
        return 0.0;
    }
    let rows = m + 1;
    let two_xi2 = 2.0 * env.xi * env.xi;
    let log_factor = |height: f64| (-(-height * height / two_xi2).exp()).ln_1p();
    if h_ij == 0.0 {
        return rows as f64 * log_factor(h_max);
    }
    let step = h_ij / rows as f64;
    if rows > EXACT_PRODUCT_LIMIT {
        let h_min = h_max - h_ij;
        let spec = QuadratureSpec::default().with_rel_tol(1e-10);
        return match integrate(log_factor, h_min.max(1e-300), h_max, &spec) {
            Ok(v) => v / step,
            Err(_) => f64::NEG_INFINITY,
        };
    }
    // lowest obstruction heights first: those factors are smallest
    let mut acc = 0.0;
    for n in (0..rows).rev() {
        let height = h_max - (n as f64 + 0.5) * step;
        acc += log_factor(height);
        if acc < -745.0 {
            return f64::NEG_INFINITY;
        }
    }
    acc
}

/// LoS probability from the finite building-row product.
pub fn los_probability_exact(env: &Environment, h_rx: f64, h_tx: f64, x: f64) -> Result<f64> {
    let x = check_distance(h_rx, h_tx, x)?;
    if h_rx.max(h_tx) == 0.0 {
        return Ok(0.0);
    }
    Ok(exact_log_product(env, h_rx, h_tx, x).exp())
}

/// Sigmoid LoS probability for a link with exactly one ground endpoint; the
/// elevation angle enters in degrees.
pub fn los_probability_a2g(env: &Environment, h_rx: f64, h_tx: f64, x: f64) -> Result<f64> {
    if (h_rx == 0.0) == (h_tx == 0.0) {
        return Err(Error::Domain(format!(
            "air-to-ground model needs exactly one ground endpoint (h_rx={h_rx}, h_tx={h_tx})"
        )));
    }
    let x = check_distance(h_rx, h_tx, x)?;
    let h = (h_rx - h_tx).abs();
    Ok(sigmoid(env, h, x))
}

fn sigmoid(env: &Environment, h: f64, x: f64) -> f64 {
    let theta = (h / x).min(1.0).asin().to_degrees();
    1.0 / (1.0 + env.iota * (-env.kappa * (theta - env.iota)).exp())
}

/// Log of the per-unit-exponent base of the air-to-air model.
fn a2a_log_base(env: &Environment, h_rx: f64, h_tx: f64) -> Result<f64> {
    let two_xi2 = 2.0 * env.xi * env.xi;
    if h_rx == h_tx {
        return Ok((-(-h_rx * h_rx / two_xi2).exp()).ln_1p());
    }
    let h = (h_rx - h_tx).abs();
    let raw = 1.0
        - (2.0 * std::f64::consts::PI).sqrt() * env.xi / h
            * (gaussian_q(h_rx / env.xi) - gaussian_q(h_tx / env.xi)).abs();
    if !(-0.01..=1.01).contains(&raw) {
        return Err(Error::Domain(format!(
            "air-to-air base {raw} outside [0, 1] (h_rx={h_rx}, h_tx={h_tx})"
        )));
    }
    Ok(raw.clamp(0.0, 1.0).ln())
}

/// Exponential LoS probability for a link between two aerial nodes.
pub fn los_probability_a2a(env: &Environment, h_rx: f64, h_tx: f64, x: f64) -> Result<f64> {
    if !(h_rx > 0.0 && h_tx > 0.0) {
        return Err(Error::Domain(format!(
            "air-to-air model needs both altitudes positive (h_rx={h_rx}, h_tx={h_tx})"
        )));
    }
    let x = check_distance(h_rx, h_tx, x)?;
    let log_base = a2a_log_base(env, h_rx, h_tx)?;
    Ok(exponential(env, h_rx, h_tx, log_base, x))
}

fn exponential(env: &Environment, h_rx: f64, h_tx: f64, log_base: f64, x: f64) -> f64 {
    if log_base == 0.0 {
        return 1.0;
    }
    let exponent = if h_rx == h_tx {
        x * env.sqrt_mu_nu()
    } else {
        let h = (h_rx - h_tx).abs();
        ((x - h) * (x + h)).max(0.0).sqrt() * env.sqrt_mu_nu()
    };
    if exponent == 0.0 {
        1.0
    } else {
        (log_base * exponent).exp()
    }
}

/// Probability of channel class `class` on a link of length `x` under `model`.
pub fn los_probability(
    env: &Environment,
    model: LosModel,
    class: ChannelClass,
    h_rx: f64,
    h_tx: f64,
    x: f64,
) -> Result<f64> {
    let los = match model {
        LosModel::Constant(p) => {
            check_distance(h_rx, h_tx, x)?;
            p
        }
        LosModel::Exact => los_probability_exact(env, h_rx, h_tx, x)?,
        LosModel::Approximate => {
            if h_rx == 0.0 && h_tx == 0.0 {
                check_distance(h_rx, h_tx, x)?;
                0.0
            } else if h_rx == 0.0 || h_tx == 0.0 {
                los_probability_a2g(env, h_rx, h_tx, x)?
            } else {
                los_probability_a2a(env, h_rx, h_tx, x)?
            }
        }
    };
    Ok(match class {
        ChannelClass::Los => los,
        ChannelClass::Nlos => 1.0 - los,
    })
}

/// One Nakagami power gain, Gamma(m, 1/m).
pub fn sample_fading<R: Rng + ?Sized>(class: ChannelClass, fading: &FadingParams, rng: &mut R) -> f64 {
    let m = fading.m(class) as f64;
    if m == 1.0 {
        // Exp(1) by inversion avoids the Gamma sampler's rejection loop
        return -(1.0 - rng.random::<f64>()).ln();
    }
    Gamma::new(m, 1.0 / m)
        .expect("validated Nakagami shape")
        .sample(rng)
}

/// `∫_0^r t·e^{−ηt} dt` without cancellation for small `ηr`.
fn exp_moment(eta: f64, r: f64) -> f64 {
    if eta <= 0.0 {
        return 0.5 * r * r;
    }
    if r.is_infinite() {
        return 1.0 / (eta * eta);
    }
    let u = eta * r;
    if u < 0.1 {
        // r² Σ (−u)^n / (n! (n + 2))
        let mut sum = 0.0;
        let mut pow = 1.0;
        for n in 0..30 {
            let term = pow / (n as f64 + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow *= -u / (n as f64 + 1.0);
        }
        return r * r * sum;
    }
    (-(-u).exp_m1() - u * (-u).exp()) / (eta * eta)
}

/// `∫_0^r t·(1 − e^{−ηt}) dt`, exactly 0 for `η = 0`.
fn exp_moment_complement(eta: f64, r: f64) -> f64 {
    if eta <= 0.0 || r == 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return f64::INFINITY;
    }
    let u = eta * r;
    if u < 0.1 {
        // r² Σ_{n≥1} (−1)^{n+1} u^n / (n! (n + 2))
        let mut sum = 0.0;
        let mut pow = u;
        for n in 1..30 {
            let term = pow / (n as f64 + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow *= -u / (n as f64 + 1.0);
        }
        return r * r * sum;
    }
    0.5 * r * r - exp_moment(eta, r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProfileKind {
    Zero,
    Constant(f64),
    Sigmoid,
    Exponential { log_base: f64, equal: bool },
    Exact,
}

/// LoS probability of one altitude pair with model selection and parameter
/// checks done once; evaluation is infallible for `x ≥ h_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProfile {
    env: Environment,
    h_rx: f64,
    h_tx: f64,
    kind: ProfileKind,
}

impl LinkProfile {
    pub fn new(env: &Environment, model: LosModel, h_rx: f64, h_tx: f64) -> Result<Self> {
        let kind = match model {
            LosModel::Constant(p) => ProfileKind::Constant(p),
            LosModel::Exact => {
                if h_rx.max(h_tx) == 0.0 {
                    ProfileKind::Zero
                } else {
                    ProfileKind::Exact
                }
            }
            LosModel::Approximate => {
                if h_rx == 0.0 && h_tx == 0.0 {
                    ProfileKind::Zero
                } else if h_rx == 0.0 || h_tx == 0.0 {
                    ProfileKind::Sigmoid
                } else {
                    ProfileKind::Exponential {
                        log_base: a2a_log_base(env, h_rx, h_tx)?,
                        equal: h_rx == h_tx,
                    }
                }
            }
        };
        Ok(Self {
            env: *env,
            h_rx,
            h_tx,
            kind,
        })
    }

    /// Vertical separation `h_ij`.
    pub fn altitude_gap(&self) -> f64 {
        (self.h_rx - self.h_tx).abs()
    }

    /// ρ^L at link distance `x`; distances below `h_ij` are treated as `h_ij`.
    pub fn los(&self, x: f64) -> f64 {
        let x = x.max(self.altitude_gap());
        match self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::Constant(p) => p,
            ProfileKind::Sigmoid => sigmoid(&self.env, self.altitude_gap(), x),
            ProfileKind::Exponential { log_base, .. } => {
                exponential(&self.env, self.h_rx, self.h_tx, log_base, x)
            }
            ProfileKind::Exact => exact_log_product(&self.env, self.h_rx, self.h_tx, x).exp(),
        }
    }

    pub fn prob(&self, class: ChannelClass, x: f64) -> f64 {
        match class {
            ChannelClass::Los => self.los(x),
            ChannelClass::Nlos => 1.0 - self.los(x),
        }
    }

    /// `lim_{x→∞} ρ^(class)(x)`.
    pub fn tail_limit(&self, class: ChannelClass) -> f64 {
        let los = match self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::Constant(p) => p,
            ProfileKind::Sigmoid => self.env.sigmoid_floor(),
            ProfileKind::Exponential { log_base, .. } => {
                if log_base == 0.0 || self.env.sqrt_mu_nu() == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileKind::Exact => {
                if self.env.sqrt_mu_nu() == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        match class {
            ChannelClass::Los => los,
            ChannelClass::Nlos => 1.0 - los,
        }
    }

    /// `∫_a^b x·ρ^L(x) dx` in closed form, when the model admits one. `b` may
    /// be infinite.
    pub fn los_moment(&self, a: f64, b: f64) -> Option<f64> {
        let h = self.altitude_gap();
        let (a, b) = (a.max(h), b.max(h));
        match self.kind {
            ProfileKind::Zero => Some(0.0),
            ProfileKind::Constant(p) => Some(if b.is_infinite() {
                if p == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                0.5 * p * (b - a) * (b + a)
            }),
            ProfileKind::Exponential { log_base, .. } => {
                // x dx = r dr with r the horizontal distance
                let eta = -log_base * self.env.sqrt_mu_nu();
                let r = |x: f64| {
                    if x.is_infinite() {
                        x
                    } else {
                        ((x - h) * (x + h)).max(0.0).sqrt()
                    }
                };
                Some(exp_moment(eta, r(b)) - exp_moment(eta, r(a)))
            }
            ProfileKind::Sigmoid | ProfileKind::Exact => None,
        }
    }

    /// `∫_a^b x·ρ^N(x) dx` in closed form for finite `b`, computed without
    /// subtracting the LoS moment where the models allow it.
    pub fn nlos_moment(&self, a: f64, b: f64) -> Option<f64> {
        let h = self.altitude_gap();
        let (a, b) = (a.max(h), b.max(h));
        if b.is_infinite() {
            return None;
        }
        match self.kind {
            ProfileKind::Zero => Some(0.5 * (b - a) * (b + a)),
            ProfileKind::Constant(p) => Some(0.5 * (1.0 - p) * (b - a) * (b + a)),
            ProfileKind::Exponential { log_base, .. } => {
                let eta = -log_base * self.env.sqrt_mu_nu();
                let r = |x: f64| ((x - h) * (x + h)).max(0.0).sqrt();
                Some((exp_moment_complement(eta, r(b)) - exp_moment_complement(eta, r(a))).max(0.0))
            }
            ProfileKind::Sigmoid | ProfileKind::Exact => None,
        }
    }

    /// Exponential decay rate of ρ^L in `x` for the same-altitude exponential
    /// model, `η = −√(μν)·ln(1 − e^{−h²/2ξ²})`.
    pub fn equal_altitude_decay(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Exponential {
                log_base,
                equal: true,
            } => Some(-log_base * self.env.sqrt_mu_nu()),
            _ => None,
        }
    }
}
