//! European options on zero-coupon bonds, priced at time 0.
//!
//! The discounted bond has deterministic volatility `v(t, T)`, so under the
//! `S`-forward measure the bond-price ratio is lognormal and the call has a
//! Black-type closed form with total variance
//! `Sigma^2(S) = int_0^S (v(t, T) - v(t, S))^2 dt`.
//! Puts follow by parity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{integrate_adaptive, norm_cdf};

// Tighter than the generic pricing tolerance: the total variance can be
// small (~1e-4) and enters the price through its square root.
const VARIANCE_ABS_TOL: f64 = 1e-16;
const VARIANCE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Option with expiry `S` on a bond maturing at `T`, struck at `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub expiry: f64,
    pub maturity: f64,
    pub strike: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(expiry: f64, maturity: f64, strike: f64, kind: OptionKind) -> Result<Self> {
        let spec = Self {
            expiry,
            maturity,
            strike,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn call(expiry: f64, maturity: f64, strike: f64) -> Result<Self> {
        Self::new(expiry, maturity, strike, OptionKind::Call)
    }

    pub fn put(expiry: f64, maturity: f64, strike: f64) -> Result<Self> {
        Self::new(expiry, maturity, strike, OptionKind::Put)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0 && self.expiry <= self.maturity && self.maturity.is_finite()) {
            return Err(Error::Domain(format!(
                "option needs 0 < S <= T (got S = {}, T = {})",
                self.expiry, self.maturity
            )));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::Domain(format!("strike must be positive (got {})", self.strike)));
        }
        Ok(())
    }
}

/// Closed-form valuation of a call and its parity put.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionValuation {
    pub call: f64,
    pub put: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub sigma_sq: f64,
    /// `P(0, S)`.
    pub discount_expiry: f64,
    /// `P(0, T)`.
    pub discount_maturity: f64,
}

impl OptionValuation {
    pub fn price(&self, kind: OptionKind) -> f64 {
        match kind {
            OptionKind::Call => self.call,
            OptionKind::Put => self.put,
        }
    }
}

/// Volatility of the forward bond price `P(t, T) / P(t, S)`:
/// `v_{S,T}(t) = v(t, T) - v(t, S)`.
pub fn forward_vol(t: f64, spec: &OptionSpec, params: &ModelParams) -> Result<f64> {
    if !(t >= 0.0 && t <= spec.expiry) {
        return Err(Error::Domain(format!(
            "forward volatility needs 0 <= t <= S (got t = {t}, S = {})",
            spec.expiry
        )));
    }
    let ModelParams { b, sigma, .. } = *params;
    let to_maturity = spec.maturity - t;
    let to_expiry = spec.expiry - t;
    Ok(sigma / b
        * ((-b * to_maturity).exp() - (-b * to_expiry).exp()
            + params.innovation_scale(t)
                * (params.memory_kernel(to_maturity) - params.memory_kernel(to_expiry))))
}

/// Total forward variance `Sigma^2(S) = int_0^S v_{S,T}(t)^2 dt`.
pub fn sigma_sq(spec: &OptionSpec, params: &ModelParams) -> Result<f64> {
    spec.validate()?;
    if spec.expiry == spec.maturity || params.sigma == 0.0 {
        return Ok(0.0);
    }
    let result = integrate_adaptive(
        |t| {
            let v = forward_vol(t, spec, params).unwrap_or(f64::NAN);
            v * v
        },
        0.0,
        spec.expiry,
        VARIANCE_ABS_TOL,
        VARIANCE_REL_TOL,
    )?;
    Ok(result.value.max(0.0))
}

/// Price the call and the parity put for `spec` (the `kind` field is ignored).
pub fn value_option(spec: &OptionSpec, params: &ModelParams) -> Result<OptionValuation> {
    spec.validate()?;
    params.check_structure()?;
    let p_maturity = params.initial_bond_price(spec.maturity)?;
    let p_expiry = params.initial_bond_price(spec.expiry)?;
    let variance = sigma_sq(spec, params)?;
    let forward = spec.strike * p_expiry;

    if variance == 0.0 {
        let d = match (p_maturity - forward).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        };
        return Ok(OptionValuation {
            call: (p_maturity - forward).max(0.0),
            put: (forward - p_maturity).max(0.0),
            d_plus: d,
            d_minus: d,
            sigma_sq: 0.0,
            discount_expiry: p_expiry,
            discount_maturity: p_maturity,
        });
    }

    let vol = variance.sqrt();
    let d_plus = ((p_maturity / forward).ln() + 0.5 * variance) / vol;
    let d_minus = d_plus - vol;
    let call = p_maturity * norm_cdf(d_plus) - forward * norm_cdf(d_minus);
    let put = forward * norm_cdf(-d_minus) - p_maturity * norm_cdf(-d_plus);
    Ok(OptionValuation {
        call: call.max(0.0),
        put: put.max(0.0),
        d_plus,
        d_minus,
        sigma_sq: variance,
        discount_expiry: p_expiry,
        discount_maturity: p_maturity,
    })
}

pub fn call_price(spec: &OptionSpec, params: &ModelParams) -> Result<f64> {
    Ok(value_option(spec, params)?.call)
}

pub fn put_price(spec: &OptionSpec, params: &ModelParams) -> Result<f64> {
    Ok(value_option(spec, params)?.put)
}

/// Price according to `spec.kind`.
pub fn option_price(spec: &OptionSpec, params: &ModelParams) -> Result<f64> {
    Ok(value_option(spec, params)?.price(spec.kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, OPTION_EXAMPLE_EXPIRY, OPTION_EXAMPLE_MATURITY, OPTION_EXAMPLE_STRIKE};
    use proptest::prelude::*;

    fn ex2_spec() -> OptionSpec {
        OptionSpec::call(OPTION_EXAMPLE_EXPIRY, OPTION_EXAMPLE_MATURITY, OPTION_EXAMPLE_STRIKE).unwrap()
    }

    /// Classical Vasicek bond option (Jamshidian), coded from scratch.
    fn jamshidian(params: &ModelParams, s: f64, t: f64, k: f64) -> (f64, f64, f64) {
        let ModelParams { a, b, sigma, r0, .. } = *params;
        let price = |tau: f64| {
            let c = (1.0 - (-b * tau).exp()) / b;
            let big_a = (tau - c) * (a / b - sigma * sigma / (2.0 * b * b)) + sigma * sigma * c * c / (4.0 * b);
            (-big_a - c * r0).exp()
        };
        let var = sigma * sigma / (2.0 * b.powi(3))
            * (1.0 - (-b * (t - s)).exp()).powi(2)
            * (1.0 - (-2.0 * b * s).exp());
        let (pt, ps) = (price(t), price(s));
        let h = (pt / (k * ps)).ln() / var.sqrt() + 0.5 * var.sqrt();
        let call = pt * norm_cdf(h) - k * ps * norm_cdf(h - var.sqrt());
        let put = k * ps * norm_cdf(-h + var.sqrt()) - pt * norm_cdf(-h);
        (call, put, var)
    }

    #[test]
    fn spec_validation() {
        assert!(OptionSpec::call(0.0, 1.0, 0.9).is_err());
        assert!(OptionSpec::call(1.5, 1.0, 0.9).is_err());
        assert!(OptionSpec::call(0.5, 1.0, 0.0).is_err());
        assert!(OptionSpec::call(1.0, 1.0, 0.9).is_ok());
    }

    #[test]
    fn forward_vol_cases() {
        let p = fixtures::option_example();
        let same = OptionSpec::call(1.0, 1.0, 0.9).unwrap();
        for t in [0.0, 0.4, 1.0] {
            assert_eq!(forward_vol(t, &same, &p).unwrap(), 0.0);
        }
        let spec = ex2_spec();
        assert!(forward_vol(0.6, &spec, &p).is_err());

        let classical = ModelParams { p: 0.0, ..p };
        for t in [0.0, 0.2, 0.5] {
            let v = forward_vol(t, &spec, &classical).unwrap();
            let oracle = classical.sigma / classical.b
                * (classical.b * t).exp()
                * ((-classical.b * spec.maturity).exp() - (-classical.b * spec.expiry).exp());
            assert!((v - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_sq_cases() {
        let p = fixtures::option_example();
        assert_eq!(sigma_sq(&OptionSpec::call(1.0, 1.0, 0.9).unwrap(), &p).unwrap(), 0.0);

        let classical = ModelParams { p: 0.0, ..p };
        let (_, _, var) = jamshidian(&classical, 0.5, 1.0, 0.3);
        let got = sigma_sq(&ex2_spec(), &classical).unwrap();
        assert!((got - var).abs() < 1e-10 * var.max(1.0));
        assert!(((got - var) / var).abs() < 1e-12);

        // 40-digit reference from an independent quadrature
        let got = sigma_sq(&ex2_spec(), &p).unwrap();
        assert!((got - 0.002_701_327_168_157_295_6).abs() < 1e-16, "{got}");
    }

    #[test]
    fn example_call_regression() {
        let v = value_option(&ex2_spec(), &fixtures::option_example()).unwrap();
        assert!((v.discount_maturity - 0.967_267_495_877_137_36).abs() < 1e-14);
        assert!((v.discount_expiry - 0.984_506_812_973_294_11).abs() < 1e-14);
        assert!((v.call - 0.671_915_451_985_149_12).abs() < 1e-14);
        assert!((v.d_plus - 22.850_868_284_849_394).abs() < 1e-9);
    }

    #[test]
    fn near_zero_strike() {
        let p = fixtures::option_example();
        let spec = OptionSpec::call(0.5, 1.0, 1e-12).unwrap();
        let v = value_option(&spec, &p).unwrap();
        assert!((v.call - v.discount_maturity).abs() < 1e-9);
        assert!(v.put.abs() < 1e-9);
    }

    #[test]
    fn matches_classical_formula() {
        let p = ModelParams { p: 0.0, ..fixtures::option_example() };
        for k in [0.85, 0.95, 0.97, 1.0] {
            let spec = OptionSpec::call(0.5, 1.0, k).unwrap();
            let v = value_option(&spec, &p).unwrap();
            let (call, put, _) = jamshidian(&p, 0.5, 1.0, k);
            assert!(((v.call - call) / call).abs() < 1e-12, "K={k}: {} vs {call}", v.call);
            if put > 1e-10 {
                assert!(((v.put - put) / put).abs() < 1e-10, "K={k}: {} vs {put}", v.put);
            }
        }
    }

    #[test]
    fn degenerate_variance_returns_intrinsic() {
        let p = ModelParams { sigma: 0.0, ..fixtures::option_example() };
        let spec = OptionSpec::call(0.5, 1.0, 0.9).unwrap();
        let v = value_option(&spec, &p).unwrap();
        assert_eq!(v.sigma_sq, 0.0);
        assert!((v.call - (v.discount_maturity - 0.9 * v.discount_expiry)).abs() < 1e-15);
        assert_eq!(v.put, 0.0);
    }

    #[test]
    fn strike_monotonicity_and_bounds() {
        let p = fixtures::option_example();
        let mut prev_call = f64::INFINITY;
        let mut prev_put = -1.0;
        for i in 1..=60 {
            let k = 0.9 + 0.0025 * i as f64;
            let v = value_option(&OptionSpec::call(0.5, 1.0, k).unwrap(), &p).unwrap();
            assert!(v.call <= prev_call && v.put >= prev_put);
            let intrinsic = (v.discount_maturity - k * v.discount_expiry).max(0.0);
            assert!(v.call >= intrinsic - 1e-15 && v.call <= v.discount_maturity);
            prev_call = v.call;
            prev_put = v.put;
        }
    }

    #[test]
    fn continuity_in_expiry() {
        // Near-the-money strike; the price moves smoothly with S so there are
        // no jumps between neighbouring expiries 1e-4 apart.
        let p = fixtures::option_example();
        let k = 0.985;
        let prices: Vec<f64> = (0..=500)
            .map(|i| {
                let s = 0.95 + 1e-4 * i as f64;
                call_price(&OptionSpec::call(s, 1.0, k).unwrap(), &p).unwrap()
            })
            .collect();
        for w in prices.windows(3) {
            assert!((w[1] - w[0]).abs() < 5e-5);
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn parity(s in 0.05f64..2.0, extra in 0.0f64..3.0, k in 0.5f64..1.1) {
            let p = fixtures::option_example();
            let spec = OptionSpec::call(s, s + extra, k).unwrap();
            let v = value_option(&spec, &p).unwrap();
            let residual = v.call - v.put - v.discount_maturity + k * v.discount_expiry;
            prop_assert!(residual.abs() < 1e-14);
        }

        #[test]
        fn variance_via_discount_vols(s in 0.05f64..2.0, extra in 0.01f64..3.0) {
            let p = fixtures::bond_example(0.02);
            let spec = OptionSpec::call(s, s + extra, 0.9).unwrap();
            let direct = sigma_sq(&spec, &p).unwrap();
            let via = integrate_adaptive(
                |t| (p.discount_vol(t, spec.maturity).unwrap() - p.discount_vol(t, spec.expiry).unwrap()).powi(2),
                0.0, s, VARIANCE_ABS_TOL, VARIANCE_REL_TOL,
            ).unwrap().value;
            prop_assert!((direct - via).abs() <= 2.0 * (VARIANCE_ABS_TOL + VARIANCE_REL_TOL * direct));
        }
    }
}
