//! Numerical kernels shared by the analytic pipeline.

pub mod derivative;
pub mod quadrature;
pub mod series;
pub mod special;

pub use derivative::{nth_derivative, nth_derivative_estimate, DerivativeEstimate};
pub use quadrature::{
    integrate, integrate_power_tail, integrate_semi_infinite, integrate_semi_infinite_scaled,
    QuadratureSpec,
    with_fallible,
};
pub use series::{pairwise_sum, sum_series, sum_series_strict, SeriesSpec, SeriesSum};
pub use special::{gaussian_q, upper_incomplete_gamma, upper_incomplete_gamma_scaled};
