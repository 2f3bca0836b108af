//! Numerical differentiation by central differences with Ridders' polynomial
//! extrapolation.

use crate::error::{Error, Result};

/// Derivative value together with the extrapolation error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error: f64,
}

const TABLEAU: usize = 10;
const SHRINK: f64 = 2.0;
const SAFE: f64 = 2.0;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Order-`n` central difference with step `h`; truncation error is O(h²).
fn central_difference<F: Fn(f64) -> f64>(f: &F, s: f64, n: usize, h: f64) -> Result<f64> {
    let mut acc = 0.0;
    for k in 0..=n {
        let x = s + (n as f64 / 2.0 - k as f64) * h;
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "function value {v} at stencil point {x} is not finite"
            )));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, k) * v;
    }
    Ok(acc / h.powi(n as i32))
}

/// `n`-th derivative of `f` at `s` with an error estimate.
///
/// `step_hint` is the initial (largest) stencil spacing; it is halved up to
/// ten times while a Neville tableau eliminates successive even powers of the
/// step. `n = 0` returns `f(s)` with zero error.
pub fn nth_derivative_estimate<F: Fn(f64) -> f64>(
    f: F,
    s: f64,
    n: usize,
    step_hint: f64,
) -> Result<DerivativeEstimate> {
    if n == 0 {
        let v = f(s);
        if !v.is_finite() {
            return Err(Error::Domain(format!("function value {v} at {s} is not finite")));
        }
        return Ok(DerivativeEstimate { value: v, error: 0.0 });
    }
    if !(step_hint > 0.0) || !step_hint.is_finite() {
        return Err(Error::Domain(format!("step hint must be positive, got {step_hint}")));
    }
    let ratio2 = SHRINK * SHRINK;
    let mut table = [[0.0f64; TABLEAU]; TABLEAU];
    let mut h = step_hint;
    table[0][0] = central_difference(&f, s, n, h)?;
    let mut best = DerivativeEstimate {
        value: table[0][0],
        error: f64::INFINITY,
    };
    for i in 1..TABLEAU {
        h /= SHRINK;
        table[0][i] = central_difference(&f, s, n, h)?;
        let mut fac = ratio2;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= ratio2;
            let err = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if err <= best.error {
                best = DerivativeEstimate {
                    value: table[j][i],
                    error: err,
                };
            }
        }
        // higher order made things worse: roundoff dominates from here on
        if (table[i][i] - table[i - 1][i - 1]).abs() >= SAFE * best.error {
            break;
        }
    }
    Ok(best)
}

/// `n`-th derivative of `f` at `s`; see [`nth_derivative_estimate`].
pub fn nth_derivative<F: Fn(f64) -> f64>(f: F, s: f64, n: usize, step_hint: f64) -> Result<f64> {
    nth_derivative_estimate(f, s, n, step_hint).map(|d| d.value)
}
