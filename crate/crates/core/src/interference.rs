//! Laplace transforms of the aggregate interference seen by a receiver whose
//! main link is known.
//!
//! Interferers of layer `k` and class `c_o` form a thinned PPP beyond the
//! exclusion radius `χ`. Receiver-oriented rules exclude every candidate that
//! would have beaten the serving node; transmitter-oriented rules exclude
//! nothing.

use crate::channel::ChannelClass;
use crate::error::{Error, Result};
use crate::geometry::candidate_radius;
use crate::network::{AssociationRule, Criterion, ValidatedConfig};
use crate::numerics::{integrate_power_tail, sum_series, upper_incomplete_gamma_scaled, SeriesSpec};
use crate::settings::EvalSettings;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A realised main link: receiver layer, transmitter layer, channel class and
/// distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEvent {
    pub rule: AssociationRule,
    pub rx_layer: usize,
    pub tx_layer: usize,
    pub class: ChannelClass,
    pub distance: f64,
}

impl LinkEvent {
    pub fn new(
        rule: AssociationRule,
        rx_layer: usize,
        tx_layer: usize,
        class: ChannelClass,
        distance: f64,
    ) -> Self {
        Self {
            rule,
            rx_layer,
            tx_layer,
            class,
            distance,
        }
    }

    fn check(&self, config: &ValidatedConfig) -> Result<()> {
        let k = config.num_layers();
        if self.rx_layer >= k || self.tx_layer >= k {
            return Err(Error::Domain(format!(
                "link event layers ({}, {}) out of range for {k} layers",
                self.rx_layer, self.tx_layer
            )));
        }
        let h = config.altitude_gap(self.rx_layer, self.tx_layer);
        if !(self.distance >= h) || !self.distance.is_finite() {
            return Err(Error::Domain(format!(
                "main-link distance {} below the altitude gap {h}",
                self.distance
            )));
        }
        Ok(())
    }
}

/// Outcome of checking whether the same-layer series may replace quadrature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applicability {
    pub applicable: bool,
    pub reason: Option<String>,
}

impl Applicability {
    fn yes() -> Self {
        Self {
            applicable: true,
            reason: None,
        }
    }

    fn no(reason: impl Into<String>) -> Self {
        Self {
            applicable: false,
            reason: Some(reason.into()),
        }
    }
}

/// Laplace transform of the interference at the receiver of one link event.
#[derive(Debug, Clone)]
pub struct LaplaceEvaluator {
    config: ValidatedConfig,
    event: LinkEvent,
    settings: EvalSettings,
}

impl LaplaceEvaluator {
    pub fn new(config: &ValidatedConfig, event: LinkEvent, settings: &EvalSettings) -> Result<Self> {
        event.check(config)?;
        Ok(Self {
            config: config.clone(),
            event,
            settings: *settings,
        })
    }

    pub fn event(&self) -> &LinkEvent {
        &self.event
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    /// χ for interferers of layer `k`, class `c_o`.
    pub fn exclusion_radius(&self, k: usize, c_o: ChannelClass) -> f64 {
        let e = &self.event;
        if !e.rule.is_receiver_oriented() {
            return 0.0;
        }
        candidate_radius(
            e.rule.criterion,
            &self.config.pathloss,
            e.class,
            c_o,
            e.distance,
            self.config.layer(e.tx_layer).bias,
            self.config.layer(k).bias,
        )
    }

    /// Lower limit of the interferer distance, `max(χ, h_ik)`.
    pub fn lower_limit(&self, k: usize, c_o: ChannelClass) -> f64 {
        self.exclusion_radius(k, c_o)
            .max(self.config.altitude_gap(self.event.rx_layer, k))
    }

    /// `-ln` of the layer factor: `2πλ ∫ xρ(1 − (1 + sPx^{-α}/m)^{-m}) dx`.
    pub fn layer_exponent(&self, k: usize, c_o: ChannelClass, s: f64) -> Result<f64> {
        check_s(s)?;
        let lambda = self.config.layer(k).density_tx;
        if s == 0.0 || lambda == 0.0 {
            return Ok(0.0);
        }
        let profile = *self.config.profile(self.event.rx_layer, k);
        let alpha = self.config.pathloss.alpha(c_o);
        let m = self.config.fading.m(c_o) as f64;
        let sp = s * self.config.layer(k).power;
        let lower = self.lower_limit(k, c_o);
        let integrand = |x: f64| {
            let rho = profile.prob(c_o, x);
            if rho == 0.0 {
                return 0.0;
            }
            let z = sp * x.powf(-alpha) / m;
            x * rho * -(-m * z.ln_1p()).exp_m1()
        };
        let pivot = lower.max((sp / m).powf(1.0 / alpha));
        let mut spec = self.settings.inner;
        spec.abs_tol /= TWO_PI * lambda;
        Ok(TWO_PI * lambda * integrate_power_tail(integrand, lower, pivot, &spec)?)
    }

    /// Interference from layer `k`, class `c_o`, by quadrature.
    pub fn laplace_layer(&self, k: usize, c_o: ChannelClass, s: f64) -> Result<f64> {
        Ok((-self.layer_exponent(k, c_o, s)?).exp())
    }

    /// Per-term series of the same-layer exponent, `n ≥ 1`.
    fn same_layer_term(&self, c_o: ChannelClass, s: f64, n: usize) -> Result<f64> {
        let i = self.event.rx_layer;
        let eta = self
            .config
            .profile(i, i)
            .equal_altitude_decay()
            .ok_or_else(|| Error::PreconditionViolated("same-layer LoS probability is not exponential".into()))?;
        let chi = self.exclusion_radius(i, c_o);
        let alpha = self.config.pathloss.alpha(c_o);
        let ratio = s * self.config.layer(i).power * chi.powf(-alpha);
        let a = 2.0 - n as f64 * alpha;
        let g = (-eta * chi).exp() * upper_incomplete_gamma_scaled(a, eta * chi)?;
        let bracket = match c_o {
            ChannelClass::Los => g,
            ChannelClass::Nlos => {
                if a >= 0.0 {
                    return Err(Error::Domain(format!(
                        "NLoS series term {n} diverges for exponent {alpha}"
                    )));
                }
                -1.0 / a - g
            }
        };
        Ok((-ratio).powi(n as i32) * chi * chi * bracket)
    }

    fn check_closed_form(&self, c_o: ChannelClass, s: f64) -> Result<()> {
        check_s(s)?;
        let why = |a: Applicability| a.reason.unwrap_or_default();
        let app = structural_applicability(&self.config, &self.event);
        if !app.applicable {
            return Err(Error::PreconditionViolated(why(app)));
        }
        let i = self.event.rx_layer;
        let ratio = s * self.config.layer(i).power
            * self.exclusion_radius(i, c_o).powf(-self.config.pathloss.alpha(c_o));
        if !(ratio < 1.0) {
            return Err(Error::Domain(format!(
                "series ratio s·P·χ^-α = {ratio} must be below 1"
            )));
        }
        Ok(())
    }

    /// Same-layer factor by the series in `Γ(2 − nα, ηχ)`, summed until the
    /// early-stop test passes.
    pub fn laplace_same_layer_closed(&self, c_o: ChannelClass, s: f64) -> Result<f64> {
        self.check_closed_form(c_o, s)?;
        if s == 0.0 {
            return Ok(1.0);
        }
        let lambda = self.config.layer(self.event.rx_layer).density_tx;
        let sum = sum_series(|n| self.same_layer_term(c_o, s, n), &self.settings.series)?;
        if !sum.converged {
            return Err(Error::SeriesNonConvergent {
                terms: sum.terms,
                last_term: sum.last_term,
            });
        }
        Ok((TWO_PI * lambda * sum.value).exp())
    }

    /// Same-layer factor from exactly `terms` series terms, without a
    /// convergence check.
    pub fn laplace_same_layer_partial(&self, c_o: ChannelClass, s: f64, terms: usize) -> Result<f64> {
        self.check_closed_form(c_o, s)?;
        let lambda = self.config.layer(self.event.rx_layer).density_tx;
        let spec = SeriesSpec {
            max_terms: terms,
            convergence_tol: 0.0,
        };
        let sum = sum_series(|n| self.same_layer_term(c_o, s, n), &spec)?;
        Ok((TWO_PI * lambda * sum.value).exp())
    }

    /// Interference-plus-noise transform `e^{-sσ²}·Π_{k,c_o} L_{k,c_o}(s)`.
    pub fn laplace_total(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let mut value = (-s * self.config.noise_power).exp();
        for k in 0..self.config.num_layers() {
            if self.config.layer(k).density_tx == 0.0 {
                continue;
            }
            for c_o in ChannelClass::ALL {
                let use_series = self.settings.closed_form
                    && k == self.event.rx_layer
                    && closed_form_applicable(&self.config, self.event.rule, &self.event, s).applicable;
                value *= if use_series {
                    self.laplace_same_layer_closed(c_o, s)?
                } else {
                    self.laplace_layer(k, c_o, s)?
                };
            }
        }
        Ok(value)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("Laplace argument must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// Conditions that do not depend on `s`.
fn structural_applicability(config: &ValidatedConfig, event: &LinkEvent) -> Applicability {
    let rule = event.rule;
    if !rule.is_receiver_oriented() {
        return Applicability::no("transmitter-oriented exclusion is zero");
    }
    if rule.criterion != Criterion::Strongest {
        return Applicability::no("nearest association does not bound the series ratio");
    }
    if config.fading.m_los != 1 || config.fading.m_nlos != 1 {
        return Applicability::no("fading is not Rayleigh");
    }
    if config.layers.iter().any(|l| l.bias != l.power) {
        return Applicability::no("bias differs from transmit power");
    }
    let i = event.rx_layer;
    if config.layer(i).altitude <= 0.0 || config.profile(i, i).equal_altitude_decay().is_none() {
        return Applicability::no("same-layer LoS probability is not exponential");
    }
    if config.layer(i).density_tx == 0.0 {
        return Applicability::no("receiver layer hosts no transmitters");
    }
    Applicability::yes()
}

/// Whether the same-layer series may be used for `event` at argument `s`.
pub fn closed_form_applicable(
    config: &ValidatedConfig,
    rule: AssociationRule,
    event: &LinkEvent,
    s: f64,
) -> Applicability {
    let event = LinkEvent { rule, ..*event };
    if config.beta(event.rx_layer, event.tx_layer) >= 1.0 {
        return Applicability::no("target SINR ≥ 1");
    }
    let app = structural_applicability(config, &event);
    if !app.applicable {
        return app;
    }
    if !(s >= 0.0) {
        return Applicability::no("negative Laplace argument");
    }
    let i = event.rx_layer;
    for c_o in ChannelClass::ALL {
        let chi = candidate_radius(
            rule.criterion,
            &config.pathloss,
            event.class,
            c_o,
            event.distance,
            config.layer(event.tx_layer).bias,
            config.layer(i).bias,
        );
        let ratio = s * config.layer(i).power * chi.powf(-config.pathloss.alpha(c_o));
        if !(ratio < 1.0) {
            return Applicability::no("series ratio s·P·χ^-α is not below 1");
        }
    }
    Applicability::yes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LosModel;
    use crate::network::{validate, LayerSpec, NetworkConfig};
    use crate::numerics::{integrate, QuadratureSpec};

    fn equal_altitude() -> ValidatedConfig {
        validate(&NetworkConfig::with_layers(vec![LayerSpec::new(100.0, 1e-5, 1e-5)], 0.7)).unwrap()
    }

    fn ground_air() -> ValidatedConfig {
        validate(&NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(150.0, 0.0, 1e-5)],
            0.7,
        ))
        .unwrap()
    }

    fn evaluator(c: &ValidatedConfig, rule: AssociationRule, rx: usize, tx: usize, y: f64) -> LaplaceEvaluator {
        LaplaceEvaluator::new(c, LinkEvent::new(rule, rx, tx, ChannelClass::Los, y), &EvalSettings::default())
            .unwrap()
    }

    fn l_scale(c: &ValidatedConfig, y: f64) -> f64 {
        0.7 * y.powf(c.pathloss.alpha_los)
    }

    #[test]
    fn trivial_arguments() {
        let c = ground_air();
        let ev = evaluator(&c, AssociationRule::RN, 0, 1, 200.0);
        assert_eq!(ev.laplace_layer(1, ChannelClass::Los, 0.0).unwrap(), 1.0);
        assert_eq!(ev.laplace_layer(0, ChannelClass::Los, 5.0).unwrap(), 1.0);
        assert!(ev.laplace_layer(1, ChannelClass::Los, -1.0).is_err());
    }

    #[test]
    fn noise_factor_and_product_identity() {
        let quiet = ground_air();
        let mut cfg = quiet.config().clone();
        cfg.noise_power = 1e-3;
        let noisy = validate(&cfg).unwrap();
        let y = 200.0;
        let s = l_scale(&quiet, y);
        let q = evaluator(&quiet, AssociationRule::RN, 0, 1, y);
        let n = evaluator(&noisy, AssociationRule::RN, 0, 1, y);
        assert_eq!(n.laplace_total(0.0).unwrap(), 1.0);
        let ratio = n.laplace_total(s).unwrap() / q.laplace_total(s).unwrap();
        assert!((ratio - (-s * 1e-3f64).exp()).abs() <= 1e-15 * ratio.max(1e-300) + 1e-300);
        let product = (-s * 1e-3f64).exp()
            * n.laplace_layer(1, ChannelClass::Los, s).unwrap()
            * n.laplace_layer(1, ChannelClass::Nlos, s).unwrap();
        assert!((n.laplace_total(s).unwrap() - product).abs() <= 4.0 * f64::EPSILON * product);
    }

    #[test]
    fn matches_direct_quadrature_oracle() {
        // independent oracle: plain finite-interval quadrature on a long
        // truncated range plus the analytic power-law tail
        let c = ground_air();
        let y = 200.0;
        let ev = evaluator(&c, AssociationRule::RN, 0, 1, y);
        let s = l_scale(&c, y);
        let p = *c.profile(0, 1);
        for c_o in ChannelClass::ALL {
            let alpha = c.pathloss.alpha(c_o);
            let lower = ev.lower_limit(1, c_o);
            let upper = 1e9;
            let f = |x: f64| x * p.prob(c_o, x) * (s * x.powf(-alpha) / (1.0 + s * x.powf(-alpha)));
            let spec = QuadratureSpec::default().with_rel_tol(1e-12).with_abs_tol(1e-20);
            let mut acc = 0.0;
            let mut a = lower;
            while a < upper {
                let b = (a * 2.0).min(upper);
                acc += integrate(f, a, b, &spec).unwrap();
                a = b;
            }
            let rho_inf = p.tail_limit(c_o);
            acc += rho_inf * s * upper.powf(2.0 - alpha) / (alpha - 2.0);
            let oracle = (-TWO_PI * 1e-5 * acc).exp();
            let v = ev.laplace_layer(1, c_o, s).unwrap();
            assert!(((v - oracle) / oracle).abs() < 1e-7, "{c_o}: {v} vs {oracle}");
        }
    }

    #[test]
    fn receiver_orientation_dominates() {
        let c = ground_air();
        let y = 180.0;
        let r = evaluator(&c, AssociationRule::RN, 0, 1, y);
        let t = evaluator(&c, AssociationRule::TN, 0, 1, y);
        for i in 0..20 {
            let s = l_scale(&c, y) * 0.2 * (i + 1) as f64;
            let lr = r.laplace_total(s).unwrap();
            let lt = t.laplace_total(s).unwrap();
            assert!(lr >= lt);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let c = equal_altitude();
        let mut settings = EvalSettings::default();
        settings.series.max_terms = 400;
        for &y in &[60.0, 150.0, 400.0] {
            let ev = LaplaceEvaluator::new(
                &c,
                LinkEvent::new(AssociationRule::RS, 0, 0, ChannelClass::Los, y),
                &settings,
            )
            .unwrap();
            let s = l_scale(&c, y);
            assert!(closed_form_applicable(&c, AssociationRule::RS, ev.event(), s).applicable);
            for c_o in ChannelClass::ALL {
                let q = ev.laplace_layer(0, c_o, s).unwrap();
                let cf = ev.laplace_same_layer_closed(c_o, s).unwrap();
                assert!(((cf - q) / q).abs() < 1e-6, "y={y} {c_o}: {cf} vs {q}");
            }
        }
    }

    #[test]
    fn closed_form_zero_argument() {
        let c = equal_altitude();
        let ev = evaluator(&c, AssociationRule::RS, 0, 0, 100.0);
        assert_eq!(ev.laplace_same_layer_closed(ChannelClass::Los, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn default_series_budget_is_reported() {
        let c = equal_altitude();
        let ev = evaluator(&c, AssociationRule::RS, 0, 0, 100.0);
        let s = l_scale(&c, 100.0);
        assert!(matches!(
            ev.laplace_same_layer_closed(ChannelClass::Los, s),
            Err(Error::SeriesNonConvergent { terms: 10, .. })
        ));
    }

    #[test]
    fn applicability_reasons() {
        let c = equal_altitude();
        let ev = LinkEvent::new(AssociationRule::RS, 0, 0, ChannelClass::Los, 100.0);
        let s = l_scale(&c, 100.0);
        assert!(closed_form_applicable(&c, AssociationRule::RS, &ev, s).applicable);
        let a = closed_form_applicable(&c, AssociationRule::TS, &ev, s);
        assert!(!a.applicable);
        assert_eq!(a.reason.as_deref(), Some("transmitter-oriented exclusion is zero"));
        let mut cfg = c.config().clone();
        cfg.set_uniform_beta(1.5);
        let c15 = validate(&cfg).unwrap();
        let a = closed_form_applicable(&c15, AssociationRule::RS, &ev, s);
        assert_eq!(a.reason.as_deref(), Some("target SINR ≥ 1"));
        let ev_t = LaplaceEvaluator::new(
            &c,
            LinkEvent::new(AssociationRule::TS, 0, 0, ChannelClass::Los, 100.0),
            &EvalSettings::default(),
        )
        .unwrap();
        assert!(matches!(
            ev_t.laplace_same_layer_closed(ChannelClass::Los, s),
            Err(Error::PreconditionViolated(_))
        ));
        // above the ratio limit
        assert!(matches!(
            LaplaceEvaluator::new(&c, ev, &EvalSettings::default())
                .unwrap()
                .laplace_same_layer_closed(ChannelClass::Los, s * 2.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_used_in_total_when_enabled() {
        let c = equal_altitude();
        let mut settings = EvalSettings::default();
        settings.series.max_terms = 400;
        let y = 120.0;
        let event = LinkEvent::new(AssociationRule::RS, 0, 0, ChannelClass::Los, y);
        let q = LaplaceEvaluator::new(&c, event, &settings).unwrap();
        settings.closed_form = true;
        let cf = LaplaceEvaluator::new(&c, event, &settings).unwrap();
        let s = l_scale(&c, y);
        let (a, b) = (q.laplace_total(s).unwrap(), cf.laplace_total(s).unwrap());
        assert!(((a - b) / a).abs() < 1e-6);
    }

    #[test]
    fn monotone_in_s_and_density() {
        let c = ground_air();
        let ev = evaluator(&c, AssociationRule::RN, 0, 1, 200.0);
        let mut prev = 1.0;
        for i in 0..50 {
            let s = 10f64.powf(-2.0 + 10.0 * i as f64 / 49.0);
            let v = ev.laplace_layer(1, ChannelClass::Nlos, s).unwrap();
            assert!(v > 0.0 && v <= prev + 1e-15);
            prev = v;
        }
        let s = l_scale(&c, 200.0);
        let mut prev = 1.0;
        for lam in [1e-6, 1e-5, 1e-4] {
            let mut cfg = c.config().clone();
            cfg.layers[1].density_tx = lam;
            let ev = evaluator(&validate(&cfg).unwrap(), AssociationRule::RN, 0, 1, 200.0);
            let v = ev.laplace_total(s).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn constant_los_rayleigh_closed_form() {
        // ρ ≡ 1, ground layer, o=t, α=4: ∫_0^∞ x·s/(s + x^4) dx = π√s/4
        let mut cfg = NetworkConfig::with_layers(vec![LayerSpec::new(0.0, 1e-5, 1e-4)], 0.7);
        cfg.los_model = LosModel::Constant(1.0);
        cfg.pathloss.alpha_los = 4.0;
        cfg.pathloss.alpha_nlos = 4.0;
        let c = validate(&cfg).unwrap();
        let ev = evaluator(&c, AssociationRule::TN, 0, 0, 10.0);
        let s: f64 = 2500.0;
        let expected = (-TWO_PI * 1e-4 * std::f64::consts::PI * s.sqrt() / 4.0).exp();
        let v = ev.laplace_layer(0, ChannelClass::Los, s).unwrap();
        assert!(((v - expected) / expected).abs() < 1e-9);
        assert_eq!(ev.laplace_layer(0, ChannelClass::Nlos, s).unwrap(), 1.0);
    }
}
