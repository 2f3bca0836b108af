//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature on finite and
//! semi-infinite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Segments of a semi-infinite integral whose absolute mass falls below
    /// this value are not refined further.
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::Domain(format!(
                "quadrature spec requires rel_tol > 0, abs_tol > 0, max_subdivisions >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("integrand returned {v} at x = {x:e}")))
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = checked(f, center)?;

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut res_gauss = 0.0;
    let mut res_kronrod = WGK[10] * f_center;
    let mut res_abs = res_kronrod.abs();

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += WG[j] * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_kronrod += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let abs_half = half.abs();
    let resabs = res_abs * abs_half;
    let resasc = res_asc * abs_half;
    let error = rescale_error((res_kronrod - res_gauss) * half, resabs, resasc);
    Ok(Segment {
        a,
        b,
        value: res_kronrod * half,
        error,
        resabs,
    })
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    tail_cutoff: Option<f64>,
) -> Result<f64> {
    spec.validate()?;
    if a == b {
        return Ok(0.0);
    }
    let settle = |mut s: Segment| {
        if let Some(cut) = tail_cutoff {
            if s.resabs < cut {
                s.error = 0.0;
            }
        }
        s
    };

    let first = settle(gauss_kronrod_21(f, a, b)?);
    let mut heap = BinaryHeap::new();
    let mut frozen_error = 0.0;
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    let mut subdivisions = 1;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol || (heap.is_empty() && frozen_error <= tol) {
            return Ok(total);
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let width = (worst.b - worst.a).abs();
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if width <= 1000.0 * f64::EPSILON * scale || mid == worst.a || mid == worst.b {
            // cannot be refined further in floating point
            frozen_error += worst.error;
            continue;
        }
        let left = settle(gauss_kronrod_21(f, worst.a, mid)?);
        let right = settle(gauss_kronrod_21(f, mid, worst.b)?);
        subdivisions += 1;

        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
    Err(Error::NonConvergent(format!(
        "integral over [{a:e}, {b:e}] = {total:e} with error estimate {total_err:e} > tolerance {tol:e} after {subdivisions} subdivisions"
    )))
}

/// Runs `body` against an infallible view of the fallible integrand `f`.
/// The first error raised by `f` takes precedence over the integrator's own
/// result.
pub fn with_fallible<F, T, B>(f: F, body: B) -> Result<T>
where
    F: Fn(f64) -> Result<f64>,
    B: FnOnce(&dyn Fn(f64) -> f64) -> Result<T>,
{
    let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let view = |x: f64| {
        if failure.borrow().is_some() {
            return f64::NAN;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                f64::NAN
            }
        }
    };
    let out = body(&view);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("finite limits required, got [{a}, {b}]")));
    }
    adaptive(&f, a, b, spec, None)
}

/// Integrates `f` over `[lower, ∞)` through the map `x = lower + u/(1-u)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    integrate_semi_infinite_scaled(f, lower, 1.0, spec)
}

/// Same as [`integrate_semi_infinite`] with the map `x = lower + scale·u/(1-u)`,
/// which places the bulk of the integrand near `u = 1/2` when `scale` matches
/// its decay length.
pub fn integrate_semi_infinite_scaled<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !lower.is_finite() || !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!(
            "semi-infinite integral needs finite lower limit and positive scale (lower={lower}, scale={scale})"
        )));
    }
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let t = scale * u / w;
        let x = lower + t;
        if !x.is_finite() {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (w * w)
        }
    };
    adaptive(&mapped, 0.0, 1.0, spec, Some(spec.tail_cutoff))
}

/// Integrates `f` over `[lower, ∞)` for integrands with power-law (or faster)
/// decay: `[lower, pivot]` is integrated directly and the tail through the
/// logarithmic substitution `x = pivot·e^t`, which turns a power-law tail into
/// an exponential one.
pub fn integrate_power_tail<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    pivot: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let pivot = pivot.max(lower);
    if !(pivot > 0.0) {
        return Err(Error::Domain(format!(
            "power-tail integration needs a positive pivot (lower={lower}, pivot={pivot})"
        )));
    }
    let head = if pivot > lower {
        integrate(&f, lower, pivot, spec)?
    } else {
        0.0
    };
    let tail = integrate_semi_infinite(
        |t: f64| {
            if t > 700.0 {
                return 0.0;
            }
            let x = pivot * t.exp();
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * x
            }
        },
        0.0,
        spec,
    )?;
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallible_integrand_error_wins() {
        let spec = QuadratureSpec::default();
        let r = with_fallible(
            |x: f64| {
                if x > 0.5 {
                    Err(Error::PreconditionViolated("boom".into()))
                } else {
                    Ok(x)
                }
            },
            |f| integrate(f, 0.0, 1.0, &spec),
        );
        assert_eq!(r, Err(Error::PreconditionViolated("boom".into())));
        let ok = with_fallible(|x: f64| Ok(x), |f| integrate(f, 0.0, 1.0, &spec)).unwrap();
        assert!((ok - 0.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let spec = QuadratureSpec::default();
        let v = integrate_semi_infinite(|x: f64| (-x).exp(), 0.0, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn gaussian_moment_tail() {
        let spec = QuadratureSpec::default();
        let v = integrate_semi_infinite(|x: f64| x * (-x * x).exp(), 0.0, &spec).unwrap();
        assert!((v - 0.5).abs() < 1e-8, "{v}");
    }

    #[test]
    fn power_law_tail_matches_antiderivative() {
        // oracle: ∫_2^∞ x^{-3.5} dx = 2^{-2.5} / 2.5
        let expected = 2f64.powf(-2.5) / 2.5;
        let spec = QuadratureSpec::default();
        let v = integrate_semi_infinite(|x: f64| x.powf(-3.5), 2.0, &spec).unwrap();
        assert!(((v - expected) / expected).abs() < 1e-8, "{v} vs {expected}");
        let w = integrate_power_tail(|x: f64| x.powf(-3.5), 2.0, 2.0, &spec).unwrap();
        assert!(((w - expected) / expected).abs() < 1e-8, "{w} vs {expected}");
    }

    #[test]
    fn slow_power_tail_through_log_map() {
        // ∫_1^∞ x^{-1.5} dx = 2
        let spec = QuadratureSpec::default().with_rel_tol(1e-10);
        let v = integrate_power_tail(|x: f64| x.powf(-1.5), 1.0, 1.0, &spec).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn finite_polynomial_is_exact() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &spec).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_a_domain_error() {
        let spec = QuadratureSpec::default();
        let err = integrate(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, &spec);
        // the midpoint of [0,1] is a node of the first rule
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn exhausted_budget_is_non_convergent() {
        let spec = QuadratureSpec {
            max_subdivisions: 2,
            ..QuadratureSpec::default()
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &spec);
        assert!(matches!(err, Err(Error::NonConvergent(_))), "{err:?}");
    }

    #[test]
    fn deterministic() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (-x).exp() * (3.0 * x).cos();
        let a = integrate_semi_infinite(f, 0.3, &spec).unwrap();
        let b = integrate_semi_infinite(f, 0.3, &spec).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
