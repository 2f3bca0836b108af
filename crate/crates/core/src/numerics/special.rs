//! Special functions: the upper incomplete gamma function for arbitrary real
//! shape (including negative and non-positive integer shapes) and the
//! Gaussian tail probability.

use libm::{erfc, tgamma as gamma};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 10_000;

/// Standard normal upper-tail probability `Q(x) = P[Z > x]`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Upper incomplete gamma function `Γ(a, y) = ∫_y^∞ t^{a-1} e^{-t} dt`.
///
/// Any real `a` is accepted for `y > 0`; `y = 0` requires `a > 0`.
pub fn upper_incomplete_gamma(a: f64, y: f64) -> Result<f64> {
    if !a.is_finite() || !y.is_finite() || y < 0.0 {
        return Err(Error::Domain(format!(
            "upper incomplete gamma needs finite a and y >= 0 (a={a}, y={y})"
        )));
    }
    if y == 0.0 {
        if a > 0.0 {
            return Ok(gamma(a));
        }
        return Err(Error::Domain(format!(
            "upper incomplete gamma diverges for a={a} <= 0 at y=0"
        )));
    }
    if a > 0.0 && y < a + 1.0 {
        return Ok(gamma(a) - lower_incomplete_gamma_series(a, y));
    }
    let scaled = upper_incomplete_gamma_scaled(a, y)?;
    Ok((a * y.ln() - y).exp() * scaled)
}

/// `y^{-a} e^{y} Γ(a, y)` for `y > 0`.
///
/// This scaled form stays O(1) where `Γ(a, y)` itself under- or overflows,
/// e.g. large negative `a` with small `y`.
pub fn upper_incomplete_gamma_scaled(a: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() || !a.is_finite() {
        return Err(Error::Domain(format!(
            "scaled upper incomplete gamma needs y > 0 (a={a}, y={y})"
        )));
    }
    if y >= 1.0 && !(a > 0.0 && y < a + 1.0) {
        return continued_fraction(a, y);
    }
    if a > 0.0 {
        let lower = lower_incomplete_gamma_series(a, y);
        let full = gamma(a);
        return Ok((full - lower) * (y - a * y.ln()).exp());
    }
    // a <= 0 and y < 1: start from a shape in [0, 1) and recur downward with
    // G(b-1) = (y·G(b) - 1)/(b - 1), stable for y < 1.
    let steps = (-a).ceil();
    let start = a + steps;
    let mut g = if start == 0.0 {
        y.exp() * exp_integral_e1(y)
    } else {
        let lower = lower_incomplete_gamma_series(start, y);
        (gamma(start) - lower) * (y - start * y.ln()).exp()
    };
    let mut b = start;
    for _ in 0..(steps as usize) {
        g = (y * g - 1.0) / (b - 1.0);
        b -= 1.0;
    }
    Ok(g)
}

/// Lower incomplete gamma `γ(a, y)` by its power series, `a > 0`.
fn lower_incomplete_gamma_series(a: f64, y: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= y / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum * (a * y.ln() - y).exp()
}

/// Modified Lentz evaluation of the continued fraction for
/// `y^{-a} e^{y} Γ(a, y)`; converges for every real `a` when `y > 0`.
fn continued_fraction(a: f64, y: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = if b.abs() < TINY { 1.0 / TINY } else { 1.0 / b };
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::NonConvergent(format!(
        "incomplete gamma continued fraction for a={a}, y={y}"
    )))
}

/// Exponential integral `E1(y)` for `0 < y < 1` by its convergent series.
fn exp_integral_e1(y: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let k = k as f64;
        term *= -y / k;
        let add = term / k;
        sum += add;
        if add.abs() < f64::EPSILON * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    -EULER_GAMMA - y.ln() - sum
}
