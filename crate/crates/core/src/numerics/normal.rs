use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF, evaluated as `erfc(-x / sqrt 2) / 2`.
///
/// Going through `erfc` keeps full relative accuracy in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
