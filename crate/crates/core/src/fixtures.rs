//! Published parameter sets used as pricing fixtures and test inputs.

use crate::model::ModelParams;

/// Maturity grid (years) of the Treasury par-curve fits: 1, 3, 6 months and
/// 1, 2, 3, 5, 7, 10, 20 years.
pub const TREASURY_MATURITIES: [f64; 10] = [
    1.0 / 12.0,
    3.0 / 12.0,
    6.0 / 12.0,
    1.0,
    2.0,
    3.0,
    5.0,
    7.0,
    10.0,
    20.0,
];

/// Fitted to the Treasury curve of 2007-12-31.
pub const FIT_2007_12_31: ModelParams = ModelParams {
    a: 0.1635,
    b: 1.8952,
    sigma: 0.7247,
    p: 0.0909,
    q: 0.2100,
    r0: 0.0240,
};

/// Fitted to the Treasury curve of 2005-05-24.
pub const FIT_2005_05_24: ModelParams = ModelParams {
    a: 0.0822,
    b: 1.5561,
    sigma: 0.3007,
    p: 0.0696,
    q: 0.0758,
    r0: 0.0259,
};

/// Fitted to the Treasury curve of 2008-09-15.
pub const FIT_2008_09_15: ModelParams = ModelParams {
    a: 0.1216,
    b: 1.6806,
    sigma: 0.6246,
    p: 0.1170,
    q: 0.1623,
    r0: 1.0010e-5,
};

/// Maturity of the zero-coupon bond in [`bond_example`].
pub const BOND_EXAMPLE_MATURITY: f64 = 1.0;

/// Zero-coupon bond test case. No initial rate is attached to it; prices are
/// compared over a sweep of `r0`.
pub const fn bond_example(r0: f64) -> ModelParams {
    ModelParams {
        a: 0.12,
        b: 1.9,
        sigma: 0.35,
        p: 0.034,
        q: 0.12,
        r0,
    }
}

pub const OPTION_EXAMPLE_MATURITY: f64 = 1.0;
pub const OPTION_EXAMPLE_STRIKE: f64 = 0.3;
pub const OPTION_EXAMPLE_EXPIRY: f64 = 0.5;

/// Bond call option test case (bond maturity 1y, strike 0.3).
pub const fn option_example() -> ModelParams {
    ModelParams {
        a: 0.08,
        b: 1.5,
        sigma: 0.3,
        p: 0.07,
        q: 0.08,
        r0: 0.025,
    }
}
