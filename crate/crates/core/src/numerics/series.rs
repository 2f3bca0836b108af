//! Truncated series evaluation with an early-stop rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSpec {
    pub max_terms: usize,
    /// Summation stops once a term's magnitude drops below
    /// `convergence_tol · |partial sum|`.
    pub convergence_tol: f64,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self {
            max_terms: 10,
            convergence_tol: 1e-10,
        }
    }
}

impl SeriesSpec {
    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 || !(self.convergence_tol >= 0.0) {
            return Err(Error::Domain(format!(
                "series spec requires max_terms >= 1 and convergence_tol >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Outcome of summing a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub last_term: f64,
    pub converged: bool,
}

/// Pairwise (cascade) summation; error grows as O(log n) rather than O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sums `term(1), term(2), …` up to `spec.max_terms`, stopping early on the
/// convergence rule. Never fails on truncation; see [`sum_series_strict`].
pub fn sum_series<F>(mut term: F, spec: &SeriesSpec) -> Result<SeriesSum>
where
    F: FnMut(usize) -> Result<f64>,
{
    spec.validate()?;
    let mut terms = Vec::with_capacity(spec.max_terms);
    let mut partial = 0.0;
    let mut last = 0.0;
    for n in 1..=spec.max_terms {
        let t = term(n)?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("series term {n} is not finite ({t})")));
        }
        terms.push(t);
        partial += t;
        last = t;
        if t.abs() < spec.convergence_tol * partial.abs() || t == 0.0 {
            return Ok(SeriesSum {
                value: pairwise_sum(&terms),
                terms: n,
                last_term: t,
                converged: true,
            });
        }
    }
    Ok(SeriesSum {
        value: pairwise_sum(&terms),
        terms: spec.max_terms,
        last_term: last,
        converged: false,
    })
}

/// As [`sum_series`] but a series that has not met the stop rule within
/// `max_terms` is an error.
pub fn sum_series_strict<F>(term: F, spec: &SeriesSpec) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    let s = sum_series(term, spec)?;
    if s.converged {
        Ok(s.value)
    } else {
        Err(Error::SeriesNonConvergent {
            terms: s.terms,
            last_term: s.last_term,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_converges() {
        let spec = SeriesSpec::default().with_max_terms(100);
        let s = sum_series(|n| Ok(0.5f64.powi(n as i32)), &spec).unwrap();
        assert!(s.converged);
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncation_is_reported() {
        let spec = SeriesSpec::default();
        let s = sum_series(|n| Ok(0.9f64.powi(n as i32)), &spec).unwrap();
        assert!(!s.converged);
        assert_eq!(s.terms, 10);
        let e = sum_series_strict(|n| Ok(0.9f64.powi(n as i32)), &spec).unwrap_err();
        assert!(matches!(e, Error::SeriesNonConvergent { terms: 10, .. }));
    }

    #[test]
    fn alternating_log_series() {
        // Σ (-1)^{n+1} x^n / n = ln(1+x)
        let spec = SeriesSpec::default().with_max_terms(400);
        let x: f64 = 0.7;
        let s = sum_series_strict(|n| Ok(-(-x).powi(n as i32) / n as f64), &spec).unwrap();
        assert!((s - x.ln_1p()).abs() < 1e-9);
    }

    #[test]
    fn pairwise_matches_naive_on_exact_values() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }
}
