//! Numerical settings shared by every analytic evaluation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{QuadratureSpec, SeriesSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Integrals over the main-link distance.
    pub outer: QuadratureSpec,
    /// Integrals inside Laplace transforms and distance laws. Kept tighter
    /// than `outer` so finite differences of the transform stay above the
    /// quadrature noise.
    pub inner: QuadratureSpec,
    pub series: SeriesSpec,
    /// Use the same-layer series where it applies instead of quadrature.
    pub closed_form: bool,
    /// Initial relative step for derivatives of the Laplace transform in `s`.
    pub derivative_step: f64,
    /// Derivative terms whose disagreement stays below
    /// `1e-3 · max(|term|, derivative_floor)` are accepted.
    pub derivative_floor: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            outer: QuadratureSpec::default(),
            inner: QuadratureSpec {
                rel_tol: 1e-10,
                abs_tol: 1e-13,
                max_subdivisions: 4000,
                tail_cutoff: 1e-16,
            },
            series: SeriesSpec::default(),
            closed_form: false,
            derivative_step: 0.1,
            derivative_floor: 1e-6,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.inner.validate()?;
        self.series.validate()?;
        if !(self.derivative_step > 0.0 && self.derivative_step < 1.0) {
            return Err(Error::Domain(format!(
                "derivative_step must lie in (0, 1), got {}",
                self.derivative_step
            )));
        }
        if !(self.derivative_floor >= 0.0) {
            return Err(Error::Domain("derivative_floor must be >= 0".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn snapshot_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("settings serialize to JSON");
    hex::encode(Sha256::digest(&bytes))
}
