//! One function per subcommand. Each returns the full output text so that
//! nothing is written when a command fails before producing its result.

use rayon::prelude::*;

use aerialnet::design::{
    default_density_grid, density_upper_bound, optimize_density, two_layer_split, Objective,
};
use aerialnet::montecarlo::{run_trials, SimSpec};
use aerialnet::network::{validate, weight_density, AssociationRule, ValidatedConfig};
use aerialnet::performance::{layer_stp, network_aggregate};
use aerialnet::settings::snapshot_hash;

use crate::failure::Failure;
use crate::plan::{density_grid, PlanObjective, SweepPlan, Validation, Variable};
use crate::scenario::{Scenario, SimulationSection};
use crate::table::{num, Table};

/// Text to emit plus a failure that still lets that text be written.
pub struct Outcome {
    pub text: String,
    pub failure: Option<Failure>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

/// Sweeps with more failed points than this share exit with code 4.
const MAX_FAILED_SHARE: f64 = 0.1;

fn table(command: &str, scenario: &Scenario, seed: Option<u64>) -> Table {
    let mut t = Table::new(command);
    t.meta("rule", scenario.rule)
        .meta("settings_hash", snapshot_hash(&scenario.settings))
        .meta("config_hash", snapshot_hash(scenario.config.config()))
        .meta("seed", seed.map_or_else(|| "none".to_string(), |s| s.to_string()));
    t
}

pub fn evaluate(scenario: &Scenario) -> Result<Outcome, Failure> {
    let report = network_aggregate(&scenario.config, scenario.rule, &scenario.settings)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Runtime(format!("serialising report: {e}")))?;
    text.push('\n');
    Ok(Outcome::ok(text))
}

/// Empirical STP of one typical layer.
struct LayerSim {
    stp: f64,
    se: f64,
    discard: f64,
}

fn simulate_layer(
    config: &ValidatedConfig,
    rule: AssociationRule,
    layer: usize,
    sim: &SimulationSection,
) -> Result<LayerSim, Failure> {
    let mut spec = SimSpec::new(config, rule, layer, sim.trials, sim.seed)?;
    if let Some(r) = sim.window_radius {
        spec.window_radius = r;
    }
    let run = run_trials(config, rule, spec)?;
    let (stp, se) = run.stp();
    Ok(LayerSim {
        stp,
        se,
        discard: run.discard_fraction(),
    })
}

/// Weight-averaged empirical network STP, its standard error and the
/// largest discard fraction over the typical layers.
fn simulate_network(
    config: &ValidatedConfig,
    rule: AssociationRule,
    sim: &SimulationSection,
) -> Result<(f64, f64, f64), Failure> {
    let (mut sum, mut var, mut weight, mut discard) = (0.0, 0.0, 0.0, 0.0f64);
    for k in 0..config.num_layers() {
        let w = weight_density(config, rule, k);
        if w > 0.0 {
            let s = simulate_layer(config, rule, k, sim)?;
            sum += w * s.stp;
            var += (w * s.se).powi(2);
            weight += w;
            discard = discard.max(s.discard);
        }
    }
    Ok((sum / weight, var.sqrt() / weight, discard))
}

#[derive(Default)]
struct PointResult {
    stp: Option<f64>,
    ase: Option<f64>,
    mc: Option<(f64, f64, f64)>,
    error: Option<String>,
}

pub fn sweep(
    scenario: &Scenario,
    plan: &SweepPlan,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<Outcome, Failure> {
    plan.check(scenario.config.num_layers())?;
    let sim = match plan.validation {
        Validation::None => None,
        Validation::Montecarlo { trials: t, seed: s } => Some(SimulationSection {
            trials: trials.unwrap_or(t),
            seed: seed.or(s).unwrap_or(scenario.simulation.seed),
            ..scenario.simulation
        }),
    };
    let points = plan.points(&scenario.network);
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|p| {
            let run = || -> Result<PointResult, Failure> {
                let config = validate(&p.network)?;
                let report = network_aggregate(&config, scenario.rule, &scenario.settings)?;
                let mc = match &sim {
                    Some(s) => Some(simulate_network(&config, scenario.rule, s)?),
                    None => None,
                };
                Ok(PointResult {
                    stp: Some(report.network_stp),
                    ase: Some(report.network_ase),
                    mc,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| PointResult {
                error: Some(e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")),
                ..Default::default()
            })
        })
        .collect();

    let key = |r: &PointResult| match plan.objective {
        PlanObjective::Ase => r.ase,
        _ => r.stp,
    };
    let groups = points.iter().map(|p| p.group).max().map_or(0, |g| g + 1);
    let mut best: Vec<Option<usize>> = vec![None; groups];
    let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY); groups];
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        if let Some(v) = key(r) {
            let g = p.group;
            if best[g].is_none_or(|b| v > key(&results[b]).unwrap_or(f64::NEG_INFINITY)) {
                best[g] = Some(i);
            }
            range[g] = (range[g].0.min(v), range[g].1.max(v));
        }
    }

    let split = plan.variable == Variable::SplitRatio;
    let mut header: Vec<&str> = plan.input_columns();
    if plan.objective != PlanObjective::Ase {
        header.push("stp_1");
    }
    if plan.objective != PlanObjective::Stp {
        header.push("ase_bps_hz_m2");
    }
    if split {
        header.push("normalized_1");
    }
    if sim.is_some() {
        header.extend(["mc_stp_1", "mc_stp_se_1", "mc_discard_1"]);
    }
    header.extend(["argmax", "status"]);

    let mut t = table("sweep", scenario, sim.map(|s| s.seed));
    t.meta("variable", plan.variable.name());
    if let Some(s) = &sim {
        t.meta("trials", s.trials);
    }
    t.header(&header);
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        let mut row: Vec<String> = p.inputs.iter().map(|&v| num(Some(v))).collect();
        if plan.objective != PlanObjective::Ase {
            row.push(num(r.stp));
        }
        if plan.objective != PlanObjective::Stp {
            row.push(num(r.ase));
        }
        if split {
            let (lo, hi) = range[p.group];
            row.push(num(key(r).map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })));
        }
        if sim.is_some() {
            row.push(num(r.mc.map(|m| m.0)));
            row.push(num(r.mc.map(|m| m.1)));
            row.push(num(r.mc.map(|m| m.2)));
        }
        row.push(if best[p.group] == Some(i) { "*".into() } else { String::new() });
        row.push(r.error.clone().map_or_else(|| "ok".into(), |e| format!("failed: {e}")));
        t.row(row);
    }

    let failed = results.iter().filter(|r| r.error.is_some()).count();
    let failure = (failed as f64 > MAX_FAILED_SHARE * points.len() as f64).then_some(Failure::Sweep {
        failed,
        total: points.len(),
    });
    Ok(Outcome {
        text: t.render()?,
        failure,
    })
}

pub fn bound(scenario: &Scenario, k: usize, j: usize, objective: Objective) -> Result<Outcome, Failure> {
    let b = density_upper_bound(&scenario.config, scenario.rule, k, j, &scenario.settings)?;
    let mut t = table("bound", scenario, None);
    t.header(&["layer_idx", "tx_layer_idx", "objective", "epsilon_m2", "bound_per_m2", "reason"]);
    t.row(vec![
        k.to_string(),
        j.to_string(),
        objective.to_string(),
        num(b.epsilon.filter(|_| b.reason(objective).contains("epsilon"))),
        num(Some(b.bound(objective))),
        b.reason(objective).into(),
    ]);
    Ok(Outcome::ok(t.render()?))
}

/// Grid bounds for `optimize`; `None` picks the default grid below the bound.
pub struct GridArgs {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub per_decade: usize,
}

pub fn optimize(
    scenario: &Scenario,
    k: usize,
    j: usize,
    objective: Objective,
    grid: &GridArgs,
) -> Result<Outcome, Failure> {
    let b = density_upper_bound(&scenario.config, scenario.rule, k, j, &scenario.settings)?;
    let ceiling = b.bound(objective);
    let points = match (grid.min, grid.max) {
        (None, None) => default_density_grid(ceiling)?,
        (min, max) => density_grid(min.unwrap_or(1e-8), max.unwrap_or(1e-3), grid.per_decade)?,
    };
    let search = optimize_density(
        &scenario.network,
        scenario.rule,
        k,
        j,
        objective,
        &points,
        ceiling,
        &scenario.settings,
    )?;
    let mut t = table("optimize", scenario, None);
    t.meta("bound_per_m2", num(Some(ceiling)))
        .meta("bound_reason", b.reason(objective))
        .meta("optimal_density_per_m2", num(Some(search.density)));
    let value_col = match objective {
        Objective::Stp => "stp_1",
        Objective::Ase => "ase_bps_hz_m2",
    };
    t.header(&["density_tx_per_m2", value_col, "argmax"]);
    for &(d, v) in &search.evaluated {
        t.row(vec![num(Some(d)), num(Some(v)), if d == search.density { "*".into() } else { String::new() }]);
    }
    Ok(Outcome::ok(t.render()?))
}

pub fn split(
    scenario: &Scenario,
    j: usize,
    k: usize,
    totals: &[f64],
    objective: Objective,
    points: usize,
) -> Result<Outcome, Failure> {
    if points < 2 {
        return Err(Failure::Invalid(vec!["points: need at least 2 split ratios".into()]));
    }
    let ratios: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let value_col = match objective {
        Objective::Stp => "stp_1",
        Objective::Ase => "ase_bps_hz_m2",
    };
    let mut t = table("split", scenario, None);
    t.meta("layers", format!("j={j} k={k}"));
    t.header(&["total_density_per_m2", "ratio_1", value_col, "normalized_1", "argmax"]);
    for &total in totals {
        let r = two_layer_split(&scenario.network, scenario.rule, j, k, total, &ratios, objective, &scenario.settings)?;
        for i in 0..r.ratios.len() {
            t.row(vec![
                num(Some(total)),
                num(Some(r.ratios[i])),
                num(Some(r.values[i])),
                num(Some(r.normalized[i])),
                if i == r.argmax { "*".into() } else { String::new() },
            ]);
        }
    }
    Ok(Outcome::ok(t.render()?))
}

/// Worst-case binomial standard error for `trials` trials.
fn worst_case_se(trials: usize) -> f64 {
    0.5 / (trials as f64).sqrt()
}

pub fn validate_scenario(scenario: &Scenario, sim: &SimulationSection) -> Result<Outcome, Failure> {
    let typical = scenario.typical_layers();
    if typical.is_empty() {
        return Err(Failure::Invalid(vec!["no layer hosts typical nodes under this rule".into()]));
    }
    let floor = worst_case_se(sim.trials);
    if 3.0 * floor > sim.tolerance {
        return Err(Failure::Tolerance(vec![format!(
            "standard error exceeds tolerance: {} trials give a worst-case standard error of {floor:.4}, \
             three of which exceed the tolerance {}",
            sim.trials, sim.tolerance
        )]));
    }
    let rows: Vec<(usize, f64, LayerSim)> = typical
        .iter()
        .map(|&k| {
            let analytic = layer_stp(&scenario.config, scenario.rule, k, &scenario.settings)?;
            Ok((k, analytic, simulate_layer(&scenario.config, scenario.rule, k, sim)?))
        })
        .collect::<Result<_, Failure>>()?;
    let mut t = table("validate", scenario, Some(sim.seed));
    t.meta("trials", sim.trials).meta("tolerance", sim.tolerance);
    t.header(&[
        "layer_idx",
        "analytic_stp_1",
        "mc_stp_1",
        "mc_stp_se_1",
        "abs_error_1",
        "mc_discard_1",
        "result",
    ]);
    let mut breaches = Vec::new();
    for (k, analytic, s) in &rows {
        let err = (analytic - s.stp).abs();
        let pass = err <= sim.tolerance;
        if !pass {
            breaches.push(format!(
                "layer {k}: |{analytic:.4} - {:.4}| = {err:.4} > {} (standard error {:.4})",
                s.stp, sim.tolerance, s.se
            ));
        }
        t.row(vec![
            k.to_string(),
            num(Some(*analytic)),
            num(Some(s.stp)),
            num(Some(s.se)),
            num(Some(err)),
            num(Some(s.discard)),
            if pass { "pass".into() } else { "fail".into() },
        ]);
    }
    Ok(Outcome {
        text: t.render()?,
        failure: (!breaches.is_empty()).then_some(Failure::Tolerance(breaches)),
    })
}

pub fn montecarlo_dump(scenario: &Scenario, layer: Option<usize>, sim: &SimulationSection) -> Result<Outcome, Failure> {
    let layer = match layer {
        Some(k) => k,
        None => *scenario
            .typical_layers()
            .first()
            .ok_or_else(|| Failure::Invalid(vec!["no layer hosts typical nodes under this rule".into()]))?,
    };
    let mut spec = SimSpec::new(&scenario.config, scenario.rule, layer, sim.trials, sim.seed)?;
    if let Some(r) = sim.window_radius {
        spec.window_radius = r;
    }
    let run = run_trials(&scenario.config, scenario.rule, spec)?;
    let mut t = table("montecarlo-dump", scenario, Some(sim.seed));
    t.meta("typical_layer", layer)
        .meta("trials", sim.trials)
        .meta("window_radius_m", num(Some(spec.window_radius)))
        .meta("discarded", run.discarded);
    let mut text = t.render()?;
    let mut body = Vec::new();
    run.write_csv(&mut body)?;
    text.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(Outcome::ok(text))
}
