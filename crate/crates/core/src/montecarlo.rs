//! Monte Carlo simulation of the layered PPP model: an independent check on
//! the distance laws, association probabilities, Laplace transforms and STP.
//!
//! Each trial places the typical node at the origin at its layer altitude,
//! draws every relevant PPP on a disk, marks each link LoS independently,
//! associates by the rule, draws Nakagami gains and evaluates the SINR.
//! Interference from beyond the disk is replaced by its mean.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{los_probability, sample_fading, ChannelClass, LinkProfile};
use crate::error::{Error, Result};
use crate::interference::LinkEvent;
use crate::network::{orientation_set, AssociationRule, Criterion, ValidatedConfig};
use crate::numerics::{integrate_power_tail, QuadratureSpec};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Largest tolerated share of trials without any association candidate.
const MAX_DISCARD_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSpec {
    /// Horizontal radius of the simulated disk, m.
    pub window_radius: f64,
    pub trials: usize,
    pub seed: u64,
    pub typical_layer: usize,
}

impl SimSpec {
    /// Spec with the default window for `rule` and `typical_layer`.
    pub fn new(
        config: &ValidatedConfig,
        rule: AssociationRule,
        typical_layer: usize,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            window_radius: default_window(config, rule, typical_layer)?,
            trials,
            seed,
            typical_layer,
        })
    }

    fn validate(&self, config: &ValidatedConfig) -> Result<()> {
        if !(self.window_radius > 0.0) || !self.window_radius.is_finite() {
            return Err(Error::Domain(format!("window radius must be positive, got {}", self.window_radius)));
        }
        if self.trials == 0 {
            return Err(Error::Domain("at least one trial is required".into()));
        }
        if self.typical_layer >= config.num_layers() {
            return Err(Error::Domain(format!("layer {} does not exist", self.typical_layer)));
        }
        Ok(())
    }
}

/// Ten times the distance within which the pooled candidate process has a
/// node with probability 0.999.
pub fn default_window(config: &ValidatedConfig, rule: AssociationRule, typical_layer: usize) -> Result<f64> {
    let target = 1000f64.ln();
    let streams: Vec<(f64, f64)> = orientation_set(config, rule)
        .into_iter()
        .enumerate()
        .filter(|&(_, l)| l > 0.0)
        .map(|(q, l)| (std::f64::consts::PI * l, config.altitude_gap(typical_layer, q)))
        .collect();
    if streams.is_empty() {
        return Err(Error::Domain(format!("no association target under rule {rule}")));
    }
    let measure = |v: f64| -> f64 {
        streams
            .iter()
            .map(|&(pl, h)| if v > h { pl * (v - h) * (v + h) } else { 0.0 })
            .sum()
    };
    let mut hi = streams.iter().map(|s| s.1).fold(1.0, f64::max);
    while measure(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if measure(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(10.0 * hi)
}

/// Horizontal positions of a PPP of `density` on a disk of `radius`.
pub fn sample_ppp_disk<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let mean = density * std::f64::consts::PI * radius * radius;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let t = TWO_PI * rng.random::<f64>();
            (r * t.cos(), r * t.sin())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Layer of the associated node.
    pub layer: usize,
    pub class: ChannelClass,
    pub distance: f64,
    pub sinr: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRun {
    pub spec: SimSpec,
    pub outcomes: Vec<TrialOutcome>,
    pub discarded: usize,
}

impl SimRun {
    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.spec.trials as f64
    }

    /// Success frequency and its standard error.
    pub fn stp(&self) -> (f64, f64) {
        let n = self.outcomes.len() as f64;
        let p = self.outcomes.iter().filter(|o| o.success).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// Empirical association frequency per `(layer, class)`.
    pub fn association_frequencies(&self) -> BTreeMap<(usize, ChannelClass), f64> {
        let mut map = BTreeMap::new();
        for o in &self.outcomes {
            *map.entry((o.layer, o.class)).or_insert(0.0) += 1.0;
        }
        let n = self.outcomes.len() as f64;
        map.values_mut().for_each(|v| *v /= n);
        map
    }

    /// Main-link distances, ascending.
    pub fn sorted_distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.outcomes.iter().map(|o| o.distance).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    /// One record per trial: trial, layer, class, distance_m, sinr, success.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(format!("writing outcomes: {e}"));
        w.write_record(["trial", "layer", "class", "distance_m", "sinr", "success"]).map_err(io)?;
        for o in &self.outcomes {
            w.write_record([
                o.trial.to_string(),
                o.layer.to_string(),
                o.class.to_string(),
                format!("{:.6}", o.distance),
                format!("{:.6e}", o.sinr),
                o.success.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(format!("writing outcomes: {e}")))
    }
}

/// RNG substream of one trial.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A transmitter or receiver realised around some receiver.
#[derive(Debug, Clone, Copy)]
struct Node {
    layer: usize,
    pos: (f64, f64),
    class: ChannelClass,
    distance: f64,
}

struct Simulator<'a> {
    config: &'a ValidatedConfig,
    rule: AssociationRule,
    spec: SimSpec,
    /// Mean interference from beyond the disk, `[rx][tx]`.
    far_field: Vec<Vec<f64>>,
}

impl<'a> Simulator<'a> {
    fn new(config: &'a ValidatedConfig, rule: AssociationRule, spec: SimSpec) -> Result<Self> {
        spec.validate(config)?;
        let k = config.num_layers();
        let mut far_field = vec![vec![0.0; k]; k];
        for (rx, row) in far_field.iter_mut().enumerate() {
            for (tx, cell) in row.iter_mut().enumerate() {
                *cell = mean_far_interference(config, rx, tx, spec.window_radius)?;
            }
        }
        Ok(Self {
            config,
            rule,
            spec,
            far_field,
        })
    }

    /// Marks a link LoS or NLoS with its model probability.
    fn mark<R: Rng>(&self, rx: usize, tx: usize, distance: f64, rng: &mut R) -> Result<ChannelClass> {
        let c = self.config;
        let p = los_probability(
            &c.environment,
            c.los_model,
            ChannelClass::Los,
            c.layer(rx).altitude,
            c.layer(tx).altitude,
            distance,
        )?;
        Ok(if rng.random::<f64>() < p {
            ChannelClass::Los
        } else {
            ChannelClass::Nlos
        })
    }

    /// Nodes of `layer` with `density` around an anchor node of
    /// `anchor_layer` at horizontal position `centre`; `nodes_are_tx` tells
    /// which end of the link the realised nodes are.
    #[allow(clippy::too_many_arguments)]
    fn realise<R: Rng>(
        &self,
        layer: usize,
        density: f64,
        anchor_layer: usize,
        centre: (f64, f64),
        nodes_are_tx: bool,
        rng: &mut R,
        out: &mut Vec<Node>,
    ) -> Result<()> {
        let h = self.config.altitude_gap(anchor_layer, layer);
        for (x, y) in sample_ppp_disk(density, self.spec.window_radius, rng) {
            let pos = (centre.0 + x, centre.1 + y);
            let distance = (x * x + y * y + h * h).sqrt();
            let class = if nodes_are_tx {
                self.mark(anchor_layer, layer, distance, rng)?
            } else {
                self.mark(layer, anchor_layer, distance, rng)?
            };
            out.push(Node {
                layer,
                pos,
                class,
                distance,
            });
        }
        Ok(())
    }

    fn score(&self, n: &Node) -> f64 {
        let b = self.config.layer(n.layer).bias;
        match self.rule.criterion {
            Criterion::Nearest => b / n.distance,
            Criterion::Strongest => b * n.distance.powf(-self.config.pathloss.alpha(n.class)),
        }
    }

    fn select(&self, candidates: &[Node]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, n) in candidates.iter().enumerate() {
            let s = self.score(n);
            if best.is_none_or(|b| s > b.1) {
                best = Some((i, s));
            }
        }
        best.map(|b| b.0)
    }

    fn received<R: Rng>(&self, tx_layer: usize, n: &Node, rng: &mut R) -> f64 {
        let c = self.config;
        c.layer(tx_layer).power
            * sample_fading(n.class, &c.fading, rng)
            * n.distance.powf(-c.pathloss.alpha(n.class))
    }

    /// Interference at a receiver of layer `rx` at `centre` from `tx_nodes`
    /// (freshly realised when `None`), skipping the serving index.
    fn interference<R: Rng>(
        &self,
        rx: usize,
        centre: (f64, f64),
        skip: Option<usize>,
        tx_nodes: Option<&[Node]>,
        rng: &mut R,
    ) -> Result<f64> {
        let mut total = 0.0;
        let owned;
        let nodes: &[Node] = match tx_nodes {
            Some(n) => n,
            None => {
                let mut v = Vec::new();
                for k in 0..self.config.num_layers() {
                    let d = self.config.layer(k).density_tx;
                    if d > 0.0 {
                        self.realise(k, d, rx, centre, true, rng, &mut v)?;
                    }
                }
                owned = v;
                &owned
            }
        };
        for (i, n) in nodes.iter().enumerate() {
            if skip == Some(i) {
                continue;
            }
            total += self.received(n.layer, n, rng);
        }
        for k in 0..self.config.num_layers() {
            total += self.far_field[rx][k];
        }
        Ok(total)
    }

    fn trial(&self, t: usize) -> Result<Option<TrialOutcome>> {
        let mut rng = trial_rng(self.spec.seed, t);
        let c = self.config;
        let typ = self.spec.typical_layer;
        let densities = orientation_set(c, self.rule);
        let mut candidates = Vec::new();
        if self.rule.is_receiver_oriented() {
            for (q, &d) in densities.iter().enumerate() {
                if d > 0.0 {
                    self.realise(q, d, typ, (0.0, 0.0), true, &mut rng, &mut candidates)?;
                }
            }
            let Some(sel) = self.select(&candidates) else {
                return Ok(None);
            };
            let main = candidates[sel];
            let signal = self.received(main.layer, &main, &mut rng);
            let interference = self.interference(typ, (0.0, 0.0), Some(sel), Some(&candidates), &mut rng)?;
            Ok(Some(self.outcome(t, typ, main.layer, &main, signal, interference)))
        } else {
            for (q, &d) in densities.iter().enumerate() {
                if d > 0.0 {
                    self.realise(q, d, typ, (0.0, 0.0), false, &mut rng, &mut candidates)?;
                }
            }
            let Some(sel) = self.select(&candidates) else {
                return Ok(None);
            };
            let main = candidates[sel];
            let signal = self.received(typ, &main, &mut rng);
            let interference = self.interference(main.layer, main.pos, None, None, &mut rng)?;
            Ok(Some(self.outcome(t, main.layer, typ, &main, signal, interference)))
        }
    }

    fn outcome(&self, trial: usize, rx: usize, tx: usize, main: &Node, signal: f64, interference: f64) -> TrialOutcome {
        let sinr = signal / (interference + self.config.noise_power);
        TrialOutcome {
            trial,
            layer: main.layer,
            class: main.class,
            distance: main.distance,
            sinr,
            success: sinr > self.config.beta(rx, tx),
        }
    }
}

/// `Σ_c 2πλP ∫_{x_W}^∞ x ρ_c(x) x^{−α_c} dx`, the mean interference at a
/// receiver of layer `rx` from transmitters of layer `tx` beyond the disk.
fn mean_far_interference(config: &ValidatedConfig, rx: usize, tx: usize, radius: f64) -> Result<f64> {
    let layer = config.layer(tx);
    if layer.density_tx == 0.0 {
        return Ok(0.0);
    }
    let h = config.altitude_gap(rx, tx);
    let edge = (radius * radius + h * h).sqrt();
    let profile: LinkProfile = *config.profile(rx, tx);
    let spec = QuadratureSpec::default().with_abs_tol(1e-30);
    let mut total = 0.0;
    for c in ChannelClass::ALL {
        let alpha = config.pathloss.alpha(c);
        total += integrate_power_tail(|x: f64| x * profile.prob(c, x) * x.powf(-alpha), edge, edge, &spec)?;
    }
    Ok(TWO_PI * layer.density_tx * layer.power * total)
}

/// Runs `spec.trials` independent trials. Trials without any candidate in
/// the window are discarded; more than 0.1% of them is an error.
pub fn run_trials(config: &ValidatedConfig, rule: AssociationRule, spec: SimSpec) -> Result<SimRun> {
    let sim = Simulator::new(config, rule, spec)?;
    let results: Vec<Option<TrialOutcome>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| sim.trial(t))
        .collect::<Result<_>>()?;
    let discarded = results.iter().filter(|r| r.is_none()).count();
    if discarded as f64 > MAX_DISCARD_FRACTION * spec.trials as f64 {
        return Err(Error::NoCandidate {
            discarded,
            trials: spec.trials,
        });
    }
    Ok(SimRun {
        spec,
        outcomes: results.into_iter().flatten().collect(),
        discarded,
    })
}

/// Sample mean of `e^{−s(I + σ²)}` and its standard error, with the main
/// link pinned by `event` and interferers excluded inside the exclusion
/// radius of their class.
pub fn empirical_laplace(config: &ValidatedConfig, event: &LinkEvent, s: f64, spec: SimSpec) -> Result<(f64, f64)> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("Laplace argument must be >= 0, got {s}")));
    }
    let eval = crate::interference::LaplaceEvaluator::new(config, *event, &Default::default())?;
    let sim = Simulator::new(config, event.rule, spec)?;
    let rx = event.rx_layer;
    let values: Vec<f64> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t);
            let mut nodes = Vec::new();
            for k in 0..config.num_layers() {
                let d = config.layer(k).density_tx;
                if d > 0.0 {
                    sim.realise(k, d, rx, (0.0, 0.0), true, &mut rng, &mut nodes)?;
                }
            }
            nodes.retain(|n| n.distance >= eval.exclusion_radius(n.layer, n.class));
            let i = sim.interference(rx, (0.0, 0.0), None, Some(&nodes), &mut rng)?;
            Ok((-s * (i + config.noise_power)).exp())
        })
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Two-sample-free Kolmogorov–Smirnov distance between an ascending sample
/// and model CDF values at the same points.
pub fn ks_distance(sorted: &[f64], cdf: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    cdf.iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LosModel;
    use crate::network::{validate, LayerSpec, NetworkConfig};

    fn ground_and_air(h: f64) -> ValidatedConfig {
        validate(&NetworkConfig::with_layers(
            vec![LayerSpec::new(0.0, 1e-5, 0.0), LayerSpec::new(h, 0.0, 1e-5)],
            0.7,
        ))
        .unwrap()
    }

    #[test]
    fn empty_and_deterministic_ppp() {
        let mut rng = trial_rng(1, 0);
        assert!(sample_ppp_disk(0.0, 100.0, &mut rng).is_empty());
        let a = sample_ppp_disk(1e-4, 500.0, &mut trial_rng(7, 3));
        let b = sample_ppp_disk(1e-4, 500.0, &mut trial_rng(7, 3));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.0.hypot(p.1) <= 500.0));
    }

    #[test]
    fn ppp_count_mean() {
        let (lambda, r) = (1e-5, 5000.0);
        let mean = lambda * std::f64::consts::PI * r * r;
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|t| sample_ppp_disk(lambda, r, &mut trial_rng(11, t)).len())
            .sum();
        let emp = total as f64 / draws as f64;
        let sigma = (mean / draws as f64).sqrt();
        assert!((emp - mean).abs() <= 3.0 * sigma, "{emp} vs {mean}");
    }

    #[test]
    fn window_matches_closed_form_percentile() {
        let c = ground_and_air(120.0);
        let w = default_window(&c, AssociationRule::RN, 0).unwrap();
        let v = (120f64.powi(2) + 1000f64.ln() / (std::f64::consts::PI * 1e-5)).sqrt();
        assert!((w - 10.0 * v).abs() < 1e-6 * w);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let c = ground_and_air(100.0);
        let spec = SimSpec::new(&c, AssociationRule::RS, 0, 200, 42).unwrap();
        let a = run_trials(&c, AssociationRule::RS, spec).unwrap();
        let b = run_trials(&c, AssociationRule::RS, spec).unwrap();
        assert_eq!(a, b);
        assert!(a.outcomes.iter().all(|o| o.distance >= 100.0));
    }

    #[test]
    fn no_candidates_is_reported() {
        let mut cfg = ground_and_air(100.0).config().clone();
        cfg.layers[1].density_tx = 1e-300;
        let c = validate(&cfg).unwrap();
        let spec = SimSpec {
            window_radius: 1000.0,
            trials: 100,
            seed: 1,
            typical_layer: 0,
        };
        assert!(matches!(
            run_trials(&c, AssociationRule::RN, spec),
            Err(Error::NoCandidate { discarded: 100, trials: 100 })
        ));
    }

    #[test]
    fn tiny_target_always_succeeds() {
        let mut cfg = ground_and_air(100.0).config().clone();
        cfg.set_uniform_beta(1e-12);
        let c = validate(&cfg).unwrap();
        let spec = SimSpec::new(&c, AssociationRule::RN, 0, 500, 3).unwrap();
        let run = run_trials(&c, AssociationRule::RN, spec).unwrap();
        assert_eq!(run.stp().0, 1.0);
    }

    #[test]
    fn laplace_trivial_cases() {
        let mut cfg = ground_and_air(100.0).config().clone();
        cfg.noise_power = 2e-3;
        let c = validate(&cfg).unwrap();
        let e = LinkEvent::new(AssociationRule::RN, 0, 1, ChannelClass::Los, 150.0);
        let spec = SimSpec::new(&c, AssociationRule::RN, 0, 50, 9).unwrap();
        assert_eq!(empirical_laplace(&c, &e, 0.0, spec).unwrap().0, 1.0);
        // λ → 0: only the noise remains
        let mut quiet = cfg.clone();
        quiet.layers[1].density_tx = 1e-300;
        let q = validate(&quiet).unwrap();
        let spec = SimSpec {
            window_radius: 5000.0,
            ..spec
        };
        let (m, se) = empirical_laplace(&q, &e, 10.0, spec).unwrap();
        let exact = (-10.0 * 2e-3f64).exp();
        assert!((m - exact).abs() <= 8.0 * f64::EPSILON * exact);
        assert!(se <= 1e-15);
    }

    #[test]
    fn csv_dump_layout() {
        let c = ground_and_air(100.0);
        let spec = SimSpec::new(&c, AssociationRule::RN, 0, 3, 5).unwrap();
        let run = run_trials(&c, AssociationRule::RN, spec).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "trial,layer,class,distance_m,sinr,success");
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn ks_distance_of_exact_uniform() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&xs, &xs) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn constant_los_association_frequencies() {
        let mut cfg = NetworkConfig::with_layers(
            vec![
                LayerSpec::new(0.0, 1e-5, 0.0),
                LayerSpec::new(50.0, 0.0, 1e-5),
                LayerSpec::new(50.0, 0.0, 1e-5),
            ],
            0.7,
        );
        cfg.los_model = LosModel::Constant(1.0);
        let c = validate(&cfg).unwrap();
        let spec = SimSpec::new(&c, AssociationRule::RN, 0, 4000, 17).unwrap();
        let f = run_trials(&c, AssociationRule::RN, spec).unwrap().association_frequencies();
        assert!((f[&(1, ChannelClass::Los)] - 0.5).abs() < 0.03);
    }
}
