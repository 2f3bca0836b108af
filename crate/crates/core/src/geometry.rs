//! Nearest-node distance laws, candidate radii, association probabilities and
//! the conditional main-link distance law.
//!
//! All laws are seen from a *typical* node at the origin: a receiver for
//! receiver-oriented rules, a transmitter otherwise. Its *candidates* are the
//! nodes of the opposite type in every layer, split into LoS and NLoS classes
//! by independent thinning.

use std::sync::Arc;

use serde::Serialize;

use crate::channel::{ChannelClass, LinkProfile, PathlossParams};
use crate::error::{Error, Result};
use crate::network::{orientation_set, AssociationRule, Criterion, ValidatedConfig};
use crate::numerics::{
    integrate, integrate_power_tail, integrate_semi_infinite_scaled, with_fallible,
    QuadratureSpec,
};
use crate::settings::EvalSettings;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Law of the distance from the typical node to the nearest candidate of one
/// layer and channel class. Support is `[h, ∞)`; when the class intensity has
/// finite total mass the law has a defect at infinity.
#[derive(Debug, Clone)]
pub struct NearestLaw {
    lambda: f64,
    profile: LinkProfile,
    class: ChannelClass,
    lower: f64,
    spec: QuadratureSpec,
}

impl NearestLaw {
    pub fn new(lambda: f64, profile: LinkProfile, class: ChannelClass, spec: QuadratureSpec) -> Self {
        let lower = profile.altitude_gap();
        Self {
            lambda,
            profile,
            class,
            lower,
            spec,
        }
    }

    pub fn density(&self) -> f64 {
        self.lambda
    }

    pub fn class(&self) -> ChannelClass {
        self.class
    }

    /// `h_ik`, the smallest possible distance.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn profile(&self) -> &LinkProfile {
        &self.profile
    }

    /// `∫_a^b x ρ^(c)(x) dx`, `h ≤ a ≤ b ≤ ∞`.
    fn moment(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let full = |a: f64, b: f64| {
            if b.is_infinite() {
                f64::INFINITY
            } else {
                0.5 * (b - a) * (b + a)
            }
        };
        let los = match self.profile.los_moment(a, b) {
            Some(v) => v,
            None => {
                if b.is_infinite() {
                    if self.profile.tail_limit(ChannelClass::Los) > 0.0 {
                        f64::INFINITY
                    } else {
                        let p = &self.profile;
                        integrate_power_tail(|x: f64| x * p.los(x), a, a.max(1.0), &self.spec)?
                    }
                } else {
                    let p = &self.profile;
                    integrate(|x: f64| x * p.los(x), a, b, &self.spec)?
                }
            }
        };
        Ok(match self.class {
            ChannelClass::Los => los,
            ChannelClass::Nlos => {
                if b.is_infinite() {
                    if self.profile.tail_limit(ChannelClass::Nlos) > 0.0 {
                        f64::INFINITY
                    } else {
                        // ρ^N → 0 only for a constant LoS override of 1
                        0.0
                    }
                } else if let Some(direct) = self.profile.nlos_moment(a, b) {
                    direct
                } else {
                    (full(a, b) - los).max(0.0)
                }
            }
        })
    }

    /// `Λ(v) = 2πλ ∫_h^{max(v,h)} x ρ(x) dx`.
    pub fn cumulative_measure(&self, v: f64) -> Result<f64> {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Domain(format!("distance must be >= 0, got {v}")));
        }
        if self.lambda == 0.0 || v <= self.lower {
            return Ok(0.0);
        }
        Ok(TWO_PI * self.lambda * self.moment(self.lower, v)?)
    }

    pub fn ccdf(&self, v: f64) -> Result<f64> {
        Ok((-self.cumulative_measure(v)?).exp())
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        Ok(-(-self.cumulative_measure(v)?).exp_m1())
    }

    /// Density `2πλ v ρ(v)·ccdf(v)` above `h`, zero below.
    pub fn pdf(&self, v: f64) -> Result<f64> {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Domain(format!("distance must be >= 0, got {v}")));
        }
        if self.lambda == 0.0 || v < self.lower {
            return Ok(0.0);
        }
        Ok(TWO_PI * self.lambda * v * self.profile.prob(self.class, v) * self.ccdf(v)?)
    }

    /// Probability that no candidate of this class exists at all.
    pub fn defect_mass(&self) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(1.0);
        }
        Ok((-TWO_PI * self.lambda * self.moment(self.lower, f64::INFINITY)?).exp())
    }
}

/// Distance below which a `(k, c_o)` candidate would have beaten a serving
/// `(j, c)` candidate at distance `y`.
pub fn candidate_radius(
    criterion: Criterion,
    pathloss: &PathlossParams,
    c: ChannelClass,
    c_o: ChannelClass,
    y: f64,
    b_j: f64,
    b_k: f64,
) -> f64 {
    match criterion {
        Criterion::Nearest => y * b_k / b_j,
        Criterion::Strongest => {
            (y.powf(pathloss.alpha(c)) * b_k / b_j).powf(1.0 / pathloss.alpha(c_o))
        }
    }
}

/// Inverse of [`candidate_radius`] in `y`.
fn candidate_radius_inverse(
    criterion: Criterion,
    pathloss: &PathlossParams,
    c: ChannelClass,
    c_o: ChannelClass,
    r: f64,
    b_j: f64,
    b_k: f64,
) -> f64 {
    match criterion {
        Criterion::Nearest => r * b_j / b_k,
        Criterion::Strongest => {
            (r.powf(pathloss.alpha(c_o)) * b_j / b_k).powf(1.0 / pathloss.alpha(c))
        }
    }
}

/// One candidate `(layer, class)` stream of the typical node.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub layer: usize,
    pub class: ChannelClass,
    pub law: NearestLaw,
}

/// Candidate streams of a typical node, shared by association probabilities,
/// main-link laws and the per-layer performance integrals.
#[derive(Debug, Clone)]
pub struct AssociationContext {
    config: ValidatedConfig,
    rule: AssociationRule,
    typical_layer: usize,
    candidates: Vec<Candidate>,
    outer: QuadratureSpec,
}

impl AssociationContext {
    pub fn new(
        config: &ValidatedConfig,
        rule: AssociationRule,
        typical_layer: usize,
        settings: &EvalSettings,
    ) -> Result<Self> {
        if typical_layer >= config.num_layers() {
            return Err(Error::Domain(format!("layer {typical_layer} does not exist")));
        }
        let densities = orientation_set(config, rule);
        let mut candidates = Vec::new();
        for (q, &lambda) in densities.iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let profile = if rule.is_receiver_oriented() {
                *config.profile(typical_layer, q)
            } else {
                *config.profile(q, typical_layer)
            };
            for class in ChannelClass::ALL {
                candidates.push(Candidate {
                    layer: q,
                    class,
                    law: NearestLaw::new(lambda, profile, class, settings.inner),
                });
            }
        }
        if candidates.is_empty() {
            return Err(Error::Domain(format!(
                "no association target for a typical node of layer {typical_layer} under rule {rule}"
            )));
        }
        Ok(Self {
            config: config.clone(),
            rule,
            typical_layer,
            candidates,
            outer: settings.outer,
        })
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    pub fn rule(&self) -> AssociationRule {
        self.rule
    }

    pub fn typical_layer(&self) -> usize {
        self.typical_layer
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn find(&self, layer: usize, class: ChannelClass) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| c.layer == layer && c.class == class)
    }

    /// Receiver and transmitter layers of a link to candidate `idx`.
    pub fn link_layers(&self, idx: usize) -> (usize, usize) {
        let q = self.candidates[idx].layer;
        if self.rule.is_receiver_oriented() {
            (self.typical_layer, q)
        } else {
            (q, self.typical_layer)
        }
    }

    fn bias(&self, layer: usize) -> f64 {
        self.config.layer(layer).bias
    }

    /// Radius every other candidate stream must avoid when candidate `idx`
    /// is selected at distance `y`.
    pub fn competitor_radius(&self, idx: usize, other: usize, y: f64) -> f64 {
        let main = &self.candidates[idx];
        let comp = &self.candidates[other];
        candidate_radius(
            self.rule.criterion,
            &self.config.pathloss,
            main.class,
            comp.class,
            y,
            self.bias(main.layer),
            self.bias(comp.layer),
        )
    }

    /// `f_V(y)·Π ccdf(R(y))`, the joint density of selecting candidate `idx`
    /// at distance `y`.
    pub fn selection_density(&self, idx: usize, y: f64) -> Result<f64> {
        let main = &self.candidates[idx];
        if y < main.law.lower() {
            return Ok(0.0);
        }
        let rho = main.law.profile().prob(main.class, y);
        if rho <= 0.0 {
            return Ok(0.0);
        }
        let mut log = (TWO_PI * main.law.density() * y * rho).ln() - main.law.cumulative_measure(y)?;
        for (o, comp) in self.candidates.iter().enumerate() {
            if o == idx {
                continue;
            }
            log -= comp.law.cumulative_measure(self.competitor_radius(idx, o, y))?;
            if log < -745.0 {
                return Ok(0.0);
            }
        }
        Ok(log.exp())
    }

    /// Points in `(h, ∞)` where a competitor's radius crosses its own lower
    /// limit; the selection density has a kink there.
    pub fn breakpoints(&self, idx: usize) -> Vec<f64> {
        let main = &self.candidates[idx];
        let lo = main.law.lower();
        let mut pts: Vec<f64> = self
            .candidates
            .iter()
            .enumerate()
            .filter(|&(o, c)| o != idx && c.law.lower() > 0.0)
            .map(|(_, comp)| {
                candidate_radius_inverse(
                    self.rule.criterion,
                    &self.config.pathloss,
                    main.class,
                    comp.class,
                    comp.law.lower(),
                    self.bias(main.layer),
                    self.bias(comp.layer),
                )
            })
            .filter(|&y| y > lo * (1.0 + 1e-12) && y.is_finite())
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        pts
    }

    /// Characteristic length of the candidate point processes.
    fn length_scale(&self) -> f64 {
        let total: f64 = orientation_set(&self.config, self.rule).iter().sum();
        1.0 / (std::f64::consts::PI * total).sqrt()
    }

    /// `∫_h^∞ selection_density(idx, y)·g(y) dy`, split at the breakpoints.
    pub fn integrate_selection<G>(&self, idx: usize, g: G, spec: &QuadratureSpec) -> Result<f64>
    where
        G: Fn(f64) -> Result<f64>,
    {
        self.integrate_selection_to(idx, f64::INFINITY, g, spec)
    }

    fn integrate_selection_to<G>(&self, idx: usize, upper: f64, g: G, spec: &QuadratureSpec) -> Result<f64>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let lo = self.candidates[idx].law.lower();
        if upper <= lo {
            return Ok(0.0);
        }
        let integrand = |y: f64| -> Result<f64> {
            let d = self.selection_density(idx, y)?;
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(d * g(y)?)
        };
        let mut edges = vec![lo];
        edges.extend(self.breakpoints(idx).into_iter().filter(|&b| b < upper));
        let scale = self.length_scale();
        with_fallible(integrand, |f| {
            let mut total = 0.0;
            for w in edges.windows(2) {
                total += integrate(f, w[0], w[1], spec)?;
            }
            let last = *edges.last().expect("non-empty");
            total += if upper.is_infinite() {
                integrate_semi_infinite_scaled(f, last, scale, spec)?
            } else {
                integrate(f, last, upper, spec)?
            };
            Ok(total)
        })
    }

    /// `A` of candidate `idx`.
    pub fn association_probability(&self, idx: usize) -> Result<f64> {
        self.integrate_selection(idx, |_| Ok(1.0), &self.outer)
    }

    pub fn outer_spec(&self) -> &QuadratureSpec {
        &self.outer
    }

    /// CDF of the main-link distance over all candidate streams at each
    /// point of an ascending sample.
    pub fn mixture_cdf_at_sorted(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let spec = self.outer.with_abs_tol(1e-14);
        let mut out = vec![0.0; ys.len()];
        for idx in 0..self.candidates.len() {
            let mut acc = 0.0;
            let mut prev = self.candidates[idx].law.lower();
            for (o, &y) in out.iter_mut().zip(ys) {
                if y > prev {
                    acc += with_fallible(
                        |t| self.selection_density(idx, t),
                        |f| integrate(f, prev, y, &spec),
                    )?;
                    prev = y;
                }
                *o += acc;
            }
        }
        Ok(out.into_iter().map(|v| v.min(1.0)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssociationEntry {
    /// Layer of the selected node.
    pub layer: usize,
    pub class: ChannelClass,
    pub probability: f64,
}

/// Association probabilities of a typical node over candidate layers and
/// classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub typical_layer: usize,
    pub rule: AssociationRule,
    pub entries: Vec<AssociationEntry>,
}

impl AssociationReport {
    pub fn get(&self, layer: usize, class: ChannelClass) -> f64 {
        self.entries
            .iter()
            .find(|e| e.layer == layer && e.class == class)
            .map_or(0.0, |e| e.probability)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

pub fn association_probabilities(
    config: &ValidatedConfig,
    rule: AssociationRule,
    typical_layer: usize,
    settings: &EvalSettings,
) -> Result<AssociationReport> {
    let ctx = AssociationContext::new(config, rule, typical_layer, settings)?;
    let mut entries = Vec::with_capacity(ctx.candidates.len());
    for (idx, c) in ctx.candidates.iter().enumerate() {
        entries.push(AssociationEntry {
            layer: c.layer,
            class: c.class,
            probability: ctx.association_probability(idx)?,
        });
    }
    Ok(AssociationReport {
        typical_layer,
        rule,
        entries,
    })
}

/// Law of the main-link distance conditioned on selecting a given candidate
/// layer and class.
#[derive(Debug, Clone)]
pub struct MainLinkLaw {
    ctx: Arc<AssociationContext>,
    idx: usize,
    probability: f64,
}

impl MainLinkLaw {
    pub fn new(ctx: Arc<AssociationContext>, layer: usize, class: ChannelClass) -> Result<Self> {
        let idx = ctx.find(layer, class).ok_or_else(|| {
            Error::Domain(format!("layer {layer} is not an association target"))
        })?;
        let probability = ctx.association_probability(idx)?;
        if !(probability > 0.0) {
            return Err(Error::Domain(format!(
                "association probability of layer {layer} class {class} is zero"
            )));
        }
        Ok(Self {
            ctx,
            idx,
            probability,
        })
    }

    pub fn association_probability(&self) -> f64 {
        self.probability
    }

    pub fn lower(&self) -> f64 {
        self.ctx.candidates[self.idx].law.lower()
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        Ok(self.ctx.selection_density(self.idx, y)? / self.probability)
    }

    pub fn cdf(&self, y: f64) -> Result<f64> {
        let spec = self.ctx.outer;
        Ok(self.ctx.integrate_selection_to(self.idx, y, |_| Ok(1.0), &spec)? / self.probability)
    }

    /// CDF at each point of an ascending sample, accumulated piecewise.
    pub fn cdf_at_sorted(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let spec = self.ctx.outer.with_abs_tol(1e-14);
        let mut out = Vec::with_capacity(ys.len());
        let mut acc = 0.0;
        let mut prev = self.lower();
        for &y in ys {
            if y > prev {
                acc += with_fallible(
                    |t| self.ctx.selection_density(self.idx, t),
                    |f| integrate(f, prev, y, &spec),
                )?;
                prev = y;
            }
            out.push((acc / self.probability).min(1.0));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LosModel;
    use crate::network::{validate, LayerSpec, NetworkConfig};

    fn settings() -> EvalSettings {
        EvalSettings::default()
    }

    fn single_layer(h: f64, lambda: f64, model: LosModel) -> ValidatedConfig {
        let mut c = NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(h, 0.0, lambda)],
            0.7,
        );
        c.los_model = model;
        validate(&c).unwrap()
    }

    #[test]
    fn empty_process_law() {
        let c = single_layer(40.0, 1e-5, LosModel::Approximate);
        let law = NearestLaw::new(0.0, *c.profile(0, 1), ChannelClass::Los, settings().inner);
        for v in [0.0, 40.0, 100.0, 1e4] {
            assert_eq!(law.ccdf(v).unwrap(), 1.0);
            assert_eq!(law.pdf(v).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_los_rayleigh_law() {
        let profile =
            LinkProfile::new(&Default::default(), LosModel::Constant(1.0), 0.0, 0.0).unwrap();
        let law = NearestLaw::new(1.0 / std::f64::consts::PI, profile, ChannelClass::Los, settings().inner);
        assert!((law.ccdf(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((law.ccdf(1.0).unwrap() - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn ccdf_is_one_below_support_and_monotone() {
        let c = single_layer(40.0, 1e-5, LosModel::Approximate);
        for class in ChannelClass::ALL {
            let law = NearestLaw::new(1e-5, *c.profile(0, 1), class, settings().inner);
            assert_eq!(law.ccdf(40.0).unwrap(), 1.0);
            assert_eq!(law.pdf(39.0).unwrap(), 0.0);
            let mut prev = 1.0;
            for i in 0..200 {
                let v = 40.0 + 10.0 * i as f64;
                let c = law.ccdf(v).unwrap();
                assert!(c <= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn candidate_radius_cases() {
        let pl = PathlossParams::default();
        let (l, n) = (ChannelClass::Los, ChannelClass::Nlos);
        assert_eq!(candidate_radius(Criterion::Nearest, &pl, l, n, 7.0, 1.0, 1.0), 7.0);
        assert!((candidate_radius(Criterion::Strongest, &pl, l, l, 7.0, 1.0, 1.0) - 7.0).abs() < 1e-12);
        let pl = PathlossParams {
            alpha_los: 2.0,
            alpha_nlos: 4.0,
        };
        let r = candidate_radius(Criterion::Strongest, &pl, l, n, 2.0, 1.0, 1.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!((r - 1.414214).abs() < 1e-6);
        let y = candidate_radius_inverse(Criterion::Strongest, &pl, l, n, r, 1.0, 1.0);
        assert!((y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_no_competition() {
        let mut cfg = NetworkConfig::with_layers(vec![LayerSpec::new(0.0, 1e-5, 1e-5)], 0.7);
        cfg.los_model = LosModel::Constant(1.0);
        let c = validate(&cfg).unwrap();
        let rep = association_probabilities(&c, AssociationRule::RN, 0, &settings()).unwrap();
        assert!((rep.get(0, ChannelClass::Los) - 1.0).abs() < 1e-9);
        assert_eq!(rep.get(0, ChannelClass::Nlos), 0.0);
    }

    #[test]
    fn identical_layers_split_evenly() {
        let mut cfg = NetworkConfig::with_layers(
            vec![LayerSpec::new(50.0, 1e-5, 1e-5), LayerSpec::new(50.0, 0.0, 1e-5)],
            0.7,
        );
        cfg.los_model = LosModel::Constant(1.0);
        let c = validate(&cfg).unwrap();
        let rep = association_probabilities(&c, AssociationRule::RN, 0, &settings()).unwrap();
        assert!((rep.get(0, ChannelClass::Los) - 0.5).abs() < 1e-8);
        assert!((rep.get(1, ChannelClass::Los) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for rule in [AssociationRule::RN, AssociationRule::RS] {
            for &h in &[50.0, 300.0] {
                let c = single_layer(h, 1e-5, LosModel::Approximate);
                let rep = association_probabilities(&c, rule, 0, &settings()).unwrap();
                assert!((rep.total() - 1.0).abs() < 1e-6, "{rule} h={h}: {}", rep.total());
            }
        }
    }

    #[test]
    fn rayleigh_main_link_density() {
        let cfg = {
            let mut c = NetworkConfig::with_layers(vec![LayerSpec::new(0.0, 1e-5, 1e-5)], 0.7);
            c.los_model = LosModel::Constant(1.0);
            validate(&c).unwrap()
        };
        let ctx = Arc::new(AssociationContext::new(&cfg, AssociationRule::RN, 0, &settings()).unwrap());
        let law = MainLinkLaw::new(ctx, 0, ChannelClass::Los).unwrap();
        let lambda: f64 = 1e-5;
        for i in 1..=10 {
            let y = 30.0 * i as f64;
            let exact = 2.0 * std::f64::consts::PI * lambda * y * (-std::f64::consts::PI * lambda * y * y).exp();
            let v = law.pdf(y).unwrap();
            assert!(((v - exact) / exact).abs() < 1e-10);
        }
    }

    #[test]
    fn bias_scaling_invariance() {
        let mut cfg = NetworkConfig::with_layers(
            vec![
                LayerSpec::new(0.0, 1e-5, 0.0),
                LayerSpec::new(100.0, 0.0, 1e-5),
                LayerSpec::new(200.0, 0.0, 3e-6),
            ],
            0.7,
        );
        cfg.layers[2].bias = 3.0;
        let a = association_probabilities(&validate(&cfg).unwrap(), AssociationRule::RS, 0, &settings()).unwrap();
        for l in cfg.layers.iter_mut() {
            l.bias *= 2.0;
        }
        let b = association_probabilities(&validate(&cfg).unwrap(), AssociationRule::RS, 0, &settings()).unwrap();
        for (x, y) in a.entries.iter().zip(b.entries.iter()) {
            assert!((x.probability - y.probability).abs() <= 1e-8);
        }
    }

    #[test]
    fn equal_altitude_los_has_defect_mass() {
        let cfg = NetworkConfig::with_layers(vec![LayerSpec::new(20.0, 1e-5, 1e-5)], 0.7);
        let c = validate(&cfg).unwrap();
        let law = NearestLaw::new(1e-5, *c.profile(0, 0), ChannelClass::Los, settings().inner);
        let eta = c.profile(0, 0).equal_altitude_decay().unwrap();
        let expected = (-TWO_PI * 1e-5 / (eta * eta)).exp();
        assert!((law.defect_mass().unwrap() - expected).abs() < 1e-12);
        assert!(expected > 0.0);
        let rep = association_probabilities(&c, AssociationRule::RS, 0, &settings()).unwrap();
        assert!((rep.total() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn main_link_pdf_normalised_and_supported() {
        let c = single_layer(150.0, 1e-5, LosModel::Approximate);
        let ctx = Arc::new(AssociationContext::new(&c, AssociationRule::RN, 0, &settings()).unwrap());
        for class in ChannelClass::ALL {
            let law = MainLinkLaw::new(ctx.clone(), 1, class).unwrap();
            assert_eq!(law.pdf(149.9).unwrap(), 0.0);
            let total = law.cdf(f64::INFINITY).unwrap();
            assert!((total - 1.0).abs() < 1e-6);
            let cdfs = law.cdf_at_sorted(&[150.0, 200.0, 300.0, 1e4]).unwrap();
            assert!(cdfs.windows(2).all(|w| w[0] <= w[1]));
            assert!((cdfs[2] - law.cdf(300.0).unwrap()).abs() < 1e-9);
        }
    }
}
