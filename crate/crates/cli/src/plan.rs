//! Sweep plans: which scenario parameter to vary, over which grid, and
//! whether each point is checked by simulation.

use std::path::Path;

use serde::Deserialize;

use aerialnet::design::log_grid;
use aerialnet::network::NetworkConfig;

use crate::failure::{decode, Failure};
use crate::scenario::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Altitude of `layer`, m.
    Altitude,
    /// Transmitter density of `layer`.
    DensitySingle,
    /// Transmitter densities of `layers[0]` and `layers[1]` on the product
    /// of `grid` and `grid_k`.
    #[serde(rename = "density_grid_2d")]
    DensityGrid2d,
    /// `λ_j = ρλ_T`, `λ_k = (1 − ρ)λ_T` for `layers = [j, k]` and each
    /// entry of `total_densities`.
    SplitRatio,
    /// Uniform target SINR.
    Beta,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Altitude => "altitude",
            Variable::DensitySingle => "density_single",
            Variable::DensityGrid2d => "density_grid_2d",
            Variable::SplitRatio => "split_ratio",
            Variable::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanObjective {
    Stp,
    Ase,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl GridSpec {
    fn issues(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.points < 2 {
            out.push(format!("{name}.points: need at least 2 points"));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            out.push(format!("{name}: need finite min < max"));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            out.push(format!("{name}: log spacing needs min > 0"));
        }
        out
    }

    /// Grid values, ascending, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match (i, self.spacing) {
                    (0, _) => self.min,
                    (i, _) if i == n - 1 => self.max,
                    (_, Spacing::Linear) => self.min + t * (self.max - self.min),
                    (_, Spacing::Log) => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Validation {
    None,
    Montecarlo { trials: usize, seed: Option<u64> },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::None
    }
}

/// Largest trial budget a plan may request per point.
pub const MAX_TRIALS: usize = 100_000_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub schema_version: u32,
    pub variable: Variable,
    pub objective: PlanObjective,
    pub layer: Option<usize>,
    pub layers: Option<[usize; 2]>,
    #[serde(default)]
    pub total_densities: Vec<f64>,
    pub grid: GridSpec,
    pub grid_k: Option<GridSpec>,
    #[serde(default)]
    pub validation: Validation,
}

/// One point of a sweep: where it sits and the network it evaluates.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Values of the input columns, in header order.
    pub inputs: Vec<f64>,
    /// Rows with the same group share one argmax and one normalisation.
    pub group: usize,
    pub network: NetworkConfig,
}

impl SweepPlan {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Runtime(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let plan: SweepPlan = decode(text, origin)?;
        if plan.schema_version != SCHEMA_VERSION {
            return Err(Failure::Parse(format!(
                "{origin}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                plan.schema_version
            )));
        }
        Ok(plan)
    }

    /// Checks the plan against a scenario with `num_layers` layers.
    pub fn check(&self, num_layers: usize) -> Result<(), Failure> {
        let mut out = self.grid.issues("grid");
        let layer_ok = |k: usize| k < num_layers;
        match self.variable {
            Variable::Altitude | Variable::DensitySingle => match self.layer {
                Some(k) if layer_ok(k) => {}
                Some(k) => out.push(format!("layer: {k} does not exist")),
                None => out.push("layer: required for this variable".into()),
            },
            Variable::DensityGrid2d | Variable::SplitRatio => match self.layers {
                Some([j, k]) if j != k && layer_ok(j) && layer_ok(k) => {}
                Some(_) => out.push("layers: need two distinct existing layers".into()),
                None => out.push("layers: required for this variable".into()),
            },
            Variable::Beta => {}
        }
        if self.variable == Variable::DensityGrid2d {
            if let Some(g) = &self.grid_k {
                out.extend(g.issues("grid_k"));
            }
        }
        if self.variable == Variable::SplitRatio {
            if self.total_densities.is_empty() {
                out.push("total_densities: required for split_ratio".into());
            }
            if self.total_densities.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
                out.push("total_densities: every entry must be finite and > 0".into());
            }
            if self.grid.min < 0.0 || self.grid.max > 1.0 {
                out.push("grid: split ratios must lie in [0, 1]".into());
            }
        }
        if let Validation::Montecarlo { trials, .. } = self.validation {
            if trials == 0 || trials > MAX_TRIALS {
                out.push(format!("validation.trials: must lie in [1, {MAX_TRIALS}]"));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Failure::Invalid(out))
        }
    }

    /// Names of the input columns, with unit suffixes.
    pub fn input_columns(&self) -> Vec<&'static str> {
        match self.variable {
            Variable::Altitude => vec!["altitude_m"],
            Variable::DensitySingle => vec!["density_tx_per_m2"],
            Variable::DensityGrid2d => vec!["density_tx_j_per_m2", "density_tx_k_per_m2"],
            Variable::SplitRatio => vec!["total_density_per_m2", "ratio_1"],
            Variable::Beta => vec!["beta_1"],
        }
    }

    /// Every point in output order. Assumes [`SweepPlan::check`] passed.
    pub fn points(&self, template: &NetworkConfig) -> Vec<SweepPoint> {
        let grid = self.grid.values();
        let with = |f: &dyn Fn(&mut NetworkConfig)| {
            let mut c = template.clone();
            f(&mut c);
            c
        };
        match self.variable {
            Variable::Altitude => {
                let k = self.layer.unwrap_or(0);
                grid.iter()
                    .map(|&h| SweepPoint {
                        inputs: vec![h],
                        group: 0,
                        network: with(&|c| c.layers[k].altitude = h),
                    })
                    .collect()
            }
            Variable::DensitySingle => {
                let k = self.layer.unwrap_or(0);
                grid.iter()
                    .map(|&d| SweepPoint {
                        inputs: vec![d],
                        group: 0,
                        network: with(&|c| c.layers[k].density_tx = d),
                    })
                    .collect()
            }
            Variable::DensityGrid2d => {
                let [j, k] = self.layers.unwrap_or([0, 1]);
                let second = self.grid_k.unwrap_or(self.grid).values();
                let mut out = Vec::with_capacity(grid.len() * second.len());
                for &dj in &grid {
                    for &dk in &second {
                        out.push(SweepPoint {
                            inputs: vec![dj, dk],
                            group: 0,
                            network: with(&|c| {
                                c.layers[j].density_tx = dj;
                                c.layers[k].density_tx = dk;
                            }),
                        });
                    }
                }
                out
            }
            Variable::SplitRatio => {
                let [j, k] = self.layers.unwrap_or([0, 1]);
                let mut out = Vec::new();
                for (g, &total) in self.total_densities.iter().enumerate() {
                    for &r in &grid {
                        out.push(SweepPoint {
                            inputs: vec![total, r],
                            group: g,
                            network: with(&|c| {
                                c.layers[j].density_tx = r * total;
                                c.layers[k].density_tx = (1.0 - r) * total;
                            }),
                        });
                    }
                }
                out
            }
            Variable::Beta => grid
                .iter()
                .map(|&b| SweepPoint {
                    inputs: vec![b],
                    group: 0,
                    network: with(&|c| c.set_uniform_beta(b)),
                })
                .collect(),
        }
    }
}

/// Log-spaced grid with `per_decade` points per decade, as used by the
/// density commands.
pub fn density_grid(min: f64, max: f64, per_decade: usize) -> Result<Vec<f64>, Failure> {
    log_grid(min, max, per_decade).map_err(Failure::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aerialnet::network::LayerSpec;

    fn template() -> NetworkConfig {
        NetworkConfig::with_layers(
            vec![
                LayerSpec::new(0.0, 1e-5, 0.0),
                LayerSpec::new(100.0, 0.0, 1e-6),
                LayerSpec::new(200.0, 0.0, 1e-6),
            ],
            0.7,
        )
    }

    #[test]
    fn grids_hit_both_endpoints() {
        let g = GridSpec { min: 1e-7, max: 1e-4, points: 4, spacing: Spacing::Log };
        let v = g.values();
        assert_eq!(v[0], 1e-7);
        assert_eq!(v[3], 1e-4);
        assert!((v[1] / 1e-6 - 1.0).abs() < 1e-12);
        let g = GridSpec { min: 50.0, max: 500.0, points: 10, spacing: Spacing::Linear };
        assert_eq!(g.values()[1], 100.0);
    }

    #[test]
    fn two_dimensional_grid_is_a_product() {
        let text = r#"
schema_version = 1
variable = "density_grid_2d"
objective = "ase"
layers = [1, 2]
grid = { min = 1e-7, max = 1e-5, points = 5, spacing = "log" }
grid_k = { min = 1e-7, max = 1e-5, points = 3, spacing = "log" }
"#;
        let plan = SweepPlan::parse(text, "p").unwrap();
        plan.check(3).unwrap();
        assert_eq!(plan.points(&template()).len(), 15);
    }

    #[test]
    fn split_points_conserve_total_density() {
        let text = r#"
schema_version = 1
variable = "split_ratio"
objective = "ase"
layers = [1, 2]
total_densities = [1e-6, 1e-5]
grid = { min = 0.0, max = 1.0, points = 11 }
"#;
        let plan = SweepPlan::parse(text, "p").unwrap();
        plan.check(3).unwrap();
        let pts = plan.points(&template());
        assert_eq!(pts.len(), 22);
        for p in &pts {
            let sum = p.network.layers[1].density_tx + p.network.layers[2].density_tx;
            assert!((sum / p.inputs[0] - 1.0).abs() < 1e-12);
        }
        assert_eq!(pts[11].group, 1);
    }

    #[test]
    fn bad_plans_list_every_problem() {
        let text = r#"
schema_version = 1
variable = "altitude"
objective = "stp"
grid = { min = 5.0, max = 1.0, points = 1 }
validation = { kind = "montecarlo", trials = 0 }
"#;
        let plan = SweepPlan::parse(text, "p").unwrap();
        let Err(Failure::Invalid(issues)) = plan.check(2) else {
            panic!("expected validation failure");
        };
        assert_eq!(issues.len(), 4, "{issues:?}");
    }
}
