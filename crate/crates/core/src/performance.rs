//! Successful-transmission probability and area spectral efficiency.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::AssociationContext;
use crate::interference::{LaplaceEvaluator, LinkEvent};
use crate::network::{weight_density, AssociationRule, ValidatedConfig};
use crate::numerics::{nth_derivative_estimate, with_fallible};
use crate::settings::{snapshot_hash, EvalSettings};

/// Excess outside `[0, 1]` attributed to quadrature noise.
const CLAMP_SLACK: f64 = 1e-6;
/// Relative disagreement tolerated between extrapolated derivatives.
const DERIVATIVE_REL_TOL: f64 = 1e-3;

/// `R_ij = log2(1 + β_ij)` indexed `[rx][tx]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMatrix {
    pub rates: Vec<Vec<f64>>,
}

impl RateMatrix {
    pub fn new(config: &ValidatedConfig) -> Self {
        Self {
            rates: config
                .target_sinr
                .iter()
                .map(|row| row.iter().map(|b| b.ln_1p() / std::f64::consts::LN_2).collect())
                .collect(),
        }
    }

    pub fn get(&self, rx: usize, tx: usize) -> f64 {
        self.rates[rx][tx]
    }
}

/// Laplace argument `l = m·β·y^α / P_tx` at which the main link just meets
/// its target.
pub fn sinr_scale(config: &ValidatedConfig, event: &LinkEvent) -> f64 {
    let m = config.fading.m(event.class) as f64;
    m * config.beta(event.rx_layer, event.tx_layer)
        * event.distance.powf(config.pathloss.alpha(event.class))
        / config.layer(event.tx_layer).power
}

fn clamp_probability(p: f64, what: &str) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        return Ok(p);
    }
    if p >= -CLAMP_SLACK && p <= 1.0 + CLAMP_SLACK {
        log::debug!("clamped {what} {p} into [0, 1]");
        return Ok(p.clamp(0.0, 1.0));
    }
    Err(Error::Domain(format!("{what} {p} lies outside [0, 1]")))
}

/// `P[SINR > β]` given the main link.
///
/// For Nakagami shape `m` this is `Σ_{n<m} (−l)^n/n! · L^{(n)}(l)`, with the
/// derivatives taken in the relative variable `t` of `L(l(1+t))`.
pub fn conditional_stp(config: &ValidatedConfig, event: &LinkEvent, settings: &EvalSettings) -> Result<f64> {
    let ev = LaplaceEvaluator::new(config, *event, settings)?;
    let l = sinr_scale(config, event);
    let m = config.fading.m(event.class) as usize;
    if m == 1 {
        return clamp_probability(ev.laplace_total(l)?, "conditional STP");
    }
    let mut p = 0.0;
    let mut factorial = 1.0;
    for n in 0..m {
        if n > 0 {
            factorial *= n as f64;
        }
        let d = with_fallible(
            |t| ev.laplace_total(l * (1.0 + t)),
            |u| nth_derivative_estimate(u, 0.0, n, settings.derivative_step),
        )?;
        if d.error > DERIVATIVE_REL_TOL * d.value.abs().max(settings.derivative_floor) {
            return Err(Error::DerivativeUnstable {
                order: n,
                value: d.value,
                error: d.error,
            });
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        p += sign * d.value / factorial;
    }
    clamp_probability(p, "conditional STP")
}

/// Per-layer STP and ASE of a typical node in one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerMetrics {
    pub stp: f64,
    pub ase: f64,
}

/// STP and ASE of layer `k`; STP is the probability for a typical node of
/// `k` (receiver or transmitter, following the rule's orientation).
pub fn layer_metrics(
    config: &ValidatedConfig,
    rule: AssociationRule,
    k: usize,
    settings: &EvalSettings,
) -> Result<LayerMetrics> {
    let ctx = AssociationContext::new(config, rule, k, settings)?;
    let rates = RateMatrix::new(config);
    let parts: Vec<(f64, f64)> = (0..ctx.candidates().len())
        .into_par_iter()
        .map(|idx| {
            let (rx, tx) = ctx.link_layers(idx);
            let class = ctx.candidates()[idx].class;
            let stp = ctx.integrate_selection(
                idx,
                |y| conditional_stp(config, &LinkEvent::new(rule, rx, tx, class, y), settings),
                ctx.outer_spec(),
            )?;
            Ok((stp, rates.get(rx, tx) * stp))
        })
        .collect::<Result<_>>()?;
    let stp = clamp_probability(parts.iter().map(|p| p.0).sum(), "layer STP")?;
    let weighted: f64 = parts.iter().map(|p| p.1).sum();
    Ok(LayerMetrics {
        stp,
        ase: weight_density(config, rule, k) * weighted,
    })
}

pub fn layer_stp(config: &ValidatedConfig, rule: AssociationRule, k: usize, settings: &EvalSettings) -> Result<f64> {
    layer_metrics(config, rule, k, settings).map(|m| m.stp)
}

/// ASE of layer `k`, bps/Hz/m². Zero when the layer hosts no typical nodes.
pub fn layer_ase(config: &ValidatedConfig, rule: AssociationRule, k: usize, settings: &EvalSettings) -> Result<f64> {
    if weight_density(config, rule, k) == 0.0 {
        return Ok(0.0);
    }
    layer_metrics(config, rule, k, settings).map(|m| m.ase)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub rule: AssociationRule,
    /// `None` for layers without typical nodes of the rule's orientation.
    pub per_layer_stp: Vec<Option<f64>>,
    pub per_layer_ase: Vec<f64>,
    pub network_stp: f64,
    pub network_ase: f64,
    pub settings: EvalSettings,
    pub settings_hash: String,
}

/// Density-weighted network STP and summed ASE.
pub fn network_aggregate(
    config: &ValidatedConfig,
    rule: AssociationRule,
    settings: &EvalSettings,
) -> Result<PerformanceReport> {
    settings.validate()?;
    let k = config.num_layers();
    let weights: Vec<f64> = (0..k).map(|i| weight_density(config, rule, i)).collect();
    let metrics: Vec<Option<LayerMetrics>> = (0..k)
        .into_par_iter()
        .map(|i| {
            if weights[i] == 0.0 {
                Ok(None)
            } else {
                layer_metrics(config, rule, i, settings).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let total: f64 = weights.iter().sum();
    let network_stp = metrics
        .iter()
        .zip(&weights)
        .filter_map(|(m, w)| m.map(|m| w / total * m.stp))
        .sum::<f64>();
    let per_layer_ase: Vec<f64> = metrics.iter().map(|m| m.map_or(0.0, |m| m.ase)).collect();
    Ok(PerformanceReport {
        rule,
        per_layer_stp: metrics.iter().map(|m| m.map(|m| m.stp)).collect(),
        network_ase: per_layer_ase.iter().sum(),
        per_layer_ase,
        network_stp: network_stp.clamp(0.0, 1.0),
        settings: *settings,
        settings_hash: snapshot_hash(settings),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelClass, LosModel};
    use crate::network::{validate, LayerSpec, NetworkConfig};

    fn ground_and_air(h: f64, m_los: u32) -> ValidatedConfig {
        let mut c = NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(h, 0.0, 1e-5)],
            0.7,
        );
        c.fading.m_los = m_los;
        validate(&c).unwrap()
    }

    #[test]
    fn sinr_scale_examples() {
        let mut cfg = NetworkConfig::with_layers(vec![LayerSpec::new(0.0, 1.0, 1.0)], 1.0);
        cfg.pathloss.alpha_los = 2.0;
        let c = validate(&cfg).unwrap();
        let e = LinkEvent::new(AssociationRule::RN, 0, 0, ChannelClass::Los, 1.0);
        assert_eq!(sinr_scale(&c, &e), 1.0);
        let e2 = LinkEvent { distance: 2.0, ..e };
        assert_eq!(sinr_scale(&c, &e2), 4.0);
        let c = ground_and_air(100.0, 1);
        let e = LinkEvent::new(AssociationRule::RN, 0, 1, ChannelClass::Los, 100.0);
        assert!((sinr_scale(&c, &e) - 7e4).abs() < 1e-9);
    }

    #[test]
    fn rayleigh_stp_is_laplace_value() {
        let c = ground_and_air(150.0, 1);
        let s = EvalSettings::default();
        let e = LinkEvent::new(AssociationRule::RN, 0, 1, ChannelClass::Los, 200.0);
        let ev = LaplaceEvaluator::new(&c, e, &s).unwrap();
        assert_eq!(
            conditional_stp(&c, &e, &s).unwrap(),
            ev.laplace_total(sinr_scale(&c, &e)).unwrap()
        );
    }

    #[test]
    fn nakagami_stp_matches_direct_derivative_sum() {
        // oracle: fixed-step central differences of the same transform
        let mut cfg = NetworkConfig::with_layers(vec![LayerSpec::new(0.0, 1e-5, 1e-4)], 0.5);
        cfg.los_model = LosModel::Constant(1.0);
        cfg.pathloss.alpha_los = 4.0;
        cfg.pathloss.alpha_nlos = 4.0;
        cfg.fading.m_los = 3;
        cfg.fading.m_nlos = 1;
        let c = validate(&cfg).unwrap();
        let e = LinkEvent::new(AssociationRule::TN, 0, 0, ChannelClass::Los, 40.0);
        let settings = EvalSettings::default();
        let ev = LaplaceEvaluator::new(&c, e, &settings).unwrap();
        let l = sinr_scale(&c, &e);
        let h = 1e-3 * l;
        let f = |s: f64| ev.laplace_total(s).unwrap();
        let d1 = (f(l + h) - f(l - h)) / (2.0 * h);
        let d2 = (f(l + h) - 2.0 * f(l) + f(l - h)) / (h * h);
        let oracle = f(l) - l * d1 + l * l * d2 / 2.0;
        let p = conditional_stp(&c, &e, &settings).unwrap();
        assert!((p - oracle).abs() < 1e-5, "{p} vs {oracle}");
    }

    #[test]
    fn m_one_general_path_agrees() {
        let c = ground_and_air(150.0, 1);
        let s = EvalSettings::default();
        let e = LinkEvent::new(AssociationRule::RN, 0, 1, ChannelClass::Los, 220.0);
        let ev = LaplaceEvaluator::new(&c, e, &s).unwrap();
        let l = sinr_scale(&c, &e);
        let d = with_fallible(|t| ev.laplace_total(l * (1.0 + t)), |u| {
            nth_derivative_estimate(u, 0.0, 0, s.derivative_step)
        })
        .unwrap();
        let p = conditional_stp(&c, &e, &s).unwrap();
        assert!(((d.value - p) / p).abs() < 1e-12);
    }

    #[test]
    fn near_zero_target_gives_certain_success() {
        let mut cfg = NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(100.0, 0.0, 1e-5)],
            1e-12,
        );
        cfg.los_model = LosModel::Constant(1.0);
        let c = validate(&cfg).unwrap();
        let p = layer_stp(&c, AssociationRule::RN, 0, &EvalSettings::default()).unwrap();
        assert!((p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stp_decreases_with_target() {
        let s = EvalSettings::default();
        let mut prev = 1.0;
        for beta in [0.1, 0.7, 2.0] {
            let mut cfg = ground_and_air(150.0, 1).config().clone();
            cfg.set_uniform_beta(beta);
            let p = layer_stp(&validate(&cfg).unwrap(), AssociationRule::RN, 0, &s).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn ase_factorises_with_uniform_target() {
        let c = ground_and_air(150.0, 1);
        let s = EvalSettings::default();
        let m = layer_metrics(&c, AssociationRule::RN, 0, &s).unwrap();
        let expected = 1e-5 * 1.7f64.log2() * m.stp;
        assert!(((m.ase - expected) / expected).abs() < 1e-12);
        assert_eq!(layer_ase(&c, AssociationRule::RN, 1, &s).unwrap(), 0.0);
    }

    #[test]
    fn report_aggregates_single_active_layer() {
        let c = ground_and_air(150.0, 1);
        let s = EvalSettings::default();
        let r = network_aggregate(&c, AssociationRule::RN, &s).unwrap();
        assert_eq!(r.per_layer_stp[1], None);
        assert_eq!(r.network_stp, r.per_layer_stp[0].unwrap());
        assert_eq!(r.network_ase, r.per_layer_ase.iter().sum::<f64>());
        assert_eq!(r.settings_hash, snapshot_hash(&s));
    }

    #[test]
    fn clamping_policy() {
        assert_eq!(clamp_probability(1.0 + 5e-7, "x").unwrap(), 1.0);
        assert_eq!(clamp_probability(-5e-7, "x").unwrap(), 0.0);
        assert!(clamp_probability(1.01, "x").is_err());
    }
}
