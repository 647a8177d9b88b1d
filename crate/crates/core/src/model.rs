//! Closed-form quantities of the memory-driven Vasicek model.
//!
//! The short rate follows `dr = (a - b r) dt + sigma dZ` where `Z` is a
//! Gaussian process with stationary increments whose drift feeds back an
//! exponentially weighted history of the Brownian driver. Coupling `r` with
//! the auxiliary state `u(t) = int_0^t e^{(p+q)s} l(s) dW(s)` gives a
//! two-dimensional Markov system, and zero-coupon bonds are exponential-affine
//! in `(r, u)`:
//!
//! ```text
//! P(t, T) = exp{ -A(t, T) - C(t, T) r(t) + D(t, T) u(t) }
//! ```
//!
//! Setting `p = 0` removes the memory and recovers the classical Vasicek
//! model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};

/// `|p + q - b|` below which the confluent form of the memory kernel is used.
pub const CONFLUENCE_THRESHOLD: f64 = 1e-9;

/// The six scalars of the model.
///
/// Valid parameters satisfy `a, b, sigma, q > 0`, `p > -q` and `r0 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift level (rate per year).
    pub a: f64,
    /// Mean-reversion speed (1/yr).
    pub b: f64,
    /// Short-rate volatility (rate per sqrt-year).
    pub sigma: f64,
    /// Memory strength; `p = 0` is the memoryless case.
    pub p: f64,
    /// Memory decay rate (1/yr).
    pub q: f64,
    /// Initial short rate.
    pub r0: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, sigma: f64, p: f64, q: f64, r0: f64) -> Result<Self> {
        let params = Self { a, b, sigma, p, q, r0 };
        params.validate()?;
        Ok(params)
    }

    /// Check the full constraint region.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if !(self.a > 0.0) {
            return Err(Error::InvalidParams(format!("a must be positive (got {})", self.a)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma must be positive (got {})",
                self.sigma
            )));
        }
        if !(self.r0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "r0 must be non-negative (got {})",
                self.r0
            )));
        }
        Ok(())
    }

    /// The constraints every formula needs to be well defined. Looser than
    /// [`validate`](Self::validate): `sigma = 0`, `a <= 0` and negative `r0`
    /// are allowed so that deterministic limits and rate sweeps can be run.
    pub fn check_structure(&self) -> Result<()> {
        let Self { a, b, sigma, p, q, r0 } = *self;
        if ![a, b, sigma, p, q, r0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameter in {self:?}")));
        }
        if !(b > 0.0) {
            return Err(Error::InvalidParams(format!("b must be positive (got {b})")));
        }
        if !(q > 0.0) {
            return Err(Error::InvalidParams(format!("q must be positive (got {q})")));
        }
        if !(p > -q) {
            return Err(Error::InvalidParams(format!("p must exceed -q (got p = {p}, q = {q})")));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be non-negative (got {sigma})")));
        }
        Ok(())
    }

    pub fn is_memoryless(&self) -> bool {
        self.p == 0.0
    }

    pub fn with_r0(self, r0: f64) -> Self {
        Self { r0, ..self }
    }

    /// `p + q`, the decay rate of the memory kernel.
    fn memory_rate(&self) -> f64 {
        self.p + self.q
    }

    /// `(p + 2q)^2 e^{2qt} - p^2`, positive for every valid `(p, q)` and `t >= 0`.
    fn memory_denominator(&self, t: f64) -> f64 {
        let s = self.p + 2.0 * self.q;
        s * s * (2.0 * self.q * t).exp() - self.p * self.p
    }

    /// `l(t) = 1 - 2qp / ((p + 2q)^2 e^{2qt} - p^2)`.
    ///
    /// Scales the Brownian innovation inside the memory term. Strictly
    /// positive, tends to 1 as `t` grows, identically 1 when `p = 0`.
    pub fn innovation_scale(&self, t: f64) -> f64 {
        1.0 - 2.0 * self.q * self.p / self.memory_denominator(t)
    }

    /// `m(t) = int_0^t p e^{-(p+q)s} (1 - e^{-b(t-s)}) ds`.
    ///
    /// Switches to the confluent closed form when `|p + q - b|` is below
    /// [`CONFLUENCE_THRESHOLD`].
    pub fn memory_kernel(&self, t: f64) -> f64 {
        if (self.memory_rate() - self.b).abs() < CONFLUENCE_THRESHOLD {
            self.memory_kernel_confluent(t)
        } else {
            self.memory_kernel_generic(t)
        }
    }

    // p/k (1 - e^{-kt}) - p (e^{-bt} - e^{-kt}) / (k - b), with k = p + q;
    // the same expression as the textbook three-term form, arranged so the
    // difference quotient goes through expm1.
    pub(crate) fn memory_kernel_generic(&self, t: f64) -> f64 {
        let k = self.memory_rate();
        let gap = k - self.b;
        let first = -self.p / k * (-k * t).exp_m1();
        let quotient = -(-self.b * t).exp() * (-gap * t).exp_m1() / gap;
        first - self.p * quotient
    }

    pub(crate) fn memory_kernel_confluent(&self, t: f64) -> f64 {
        let k = self.memory_rate();
        -self.p / k * (-k * t).exp_m1() - self.p * t * (-self.b * t).exp()
    }

    /// Derivative `m'(t) = b int_0^t p e^{-(p+q)s} e^{-b(t-s)} ds`.
    pub fn memory_kernel_slope(&self, t: f64) -> f64 {
        let k = self.memory_rate();
        let gap = k - self.b;
        let decay = (-self.b * t).exp();
        if gap.abs() < CONFLUENCE_THRESHOLD {
            self.b * self.p * t * decay
        } else {
            -self.b * self.p * decay * (-gap * t).exp_m1() / gap
        }
    }

    /// Diffusion coefficient of the auxiliary state: `e^{(p+q)t} l(t)`.
    pub fn memory_state_diffusion(&self, t: f64) -> f64 {
        (self.memory_rate() * t).exp() * self.innovation_scale(t)
    }

    /// Coefficient of `u` in the short-rate drift: `sigma p e^{-(p+q)t}`.
    pub fn memory_drift_coupling(&self, t: f64) -> f64 {
        self.sigma * self.p * (-self.memory_rate() * t).exp()
    }

    /// `C(t, T) = (1 - e^{-b(T-t)}) / b`.
    pub fn rate_loading(&self, t: f64, maturity: f64) -> Result<f64> {
        let tau = tenor(t, maturity)?;
        Ok(self.rate_loading_tenor(tau))
    }

    fn rate_loading_tenor(&self, tau: f64) -> f64 {
        -(-self.b * tau).exp_m1() / self.b
    }

    /// `A(t, T)`, the state-independent part of `-log P(t, T)`.
    ///
    /// The squared-kernel integral is evaluated by adaptive quadrature.
    pub fn deterministic_term(&self, t: f64, maturity: f64) -> Result<f64> {
        let tau = tenor(t, maturity)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        let Self { a, b, sigma, q, .. } = *self;
        let c = self.rate_loading_tenor(tau);
        let integral = integrate_adaptive(
            |s| {
                let g = self.memory_kernel(s) + (-b * s).exp_m1();
                g * g
            },
            0.0,
            tau,
            DEFAULT_ABS_TOL,
            DEFAULT_REL_TOL,
        )?
        .value;
        let m = self.memory_kernel(tau);
        Ok(a / b * (tau - c)
            - sigma * sigma / (2.0 * b * b) * integral
            - sigma * sigma * q * m * m / (b * b * self.memory_denominator(t)))
    }

    /// `D(t, T) = (sigma / b) e^{-(p+q)t} m(T - t)`, the loading on `u`.
    pub fn memory_loading(&self, t: f64, maturity: f64) -> Result<f64> {
        let tau = tenor(t, maturity)?;
        Ok(self.sigma / self.b * (-self.memory_rate() * t).exp() * self.memory_kernel(tau))
    }

    pub fn affine(&self, t: f64, maturity: f64) -> Result<AffineCoefficients> {
        Ok(AffineCoefficients {
            t,
            maturity,
            constant: self.deterministic_term(t, maturity)?,
            rate_loading: self.rate_loading(t, maturity)?,
            memory_loading: self.memory_loading(t, maturity)?,
        })
    }

    /// Zero-coupon bond price `P(t, T)` in state `(r, u)` at time `t`.
    pub fn bond_price(&self, state: &ModelState, maturity: f64) -> Result<f64> {
        Ok(self.affine(state.t, maturity)?.price(state.r, state.u))
    }

    /// Continuously compounded yield `-log P(t, T) / (T - t)`; needs `t < T`.
    pub fn yield_at(&self, state: &ModelState, maturity: f64) -> Result<f64> {
        if !(maturity > state.t) {
            return Err(Error::Domain(format!(
                "yield needs t < T (got t = {}, T = {maturity})",
                state.t
            )));
        }
        let coeffs = self.affine(state.t, maturity)?;
        Ok(-coeffs.log_price(state.r, state.u) / (maturity - state.t))
    }

    /// Time-0 yield `Y(0, T) = A(0, T)/T + C(0, T) r0 / T`.
    pub fn initial_yield(&self, maturity: f64) -> Result<f64> {
        self.yield_at(&ModelState::initial(self), maturity)
    }

    /// Time-0 bond price `P(0, T)`.
    pub fn initial_bond_price(&self, maturity: f64) -> Result<f64> {
        self.bond_price(&ModelState::initial(self), maturity)
    }

    /// Instantaneous volatility of the discounted bond price,
    /// `v(t, T) = (sigma / b) (e^{-b(T-t)} - 1 + l(t) m(T - t))`.
    pub fn discount_vol(&self, t: f64, maturity: f64) -> Result<f64> {
        let tau = tenor(t, maturity)?;
        Ok(self.sigma / self.b
            * ((-self.b * tau).exp_m1() + self.innovation_scale(t) * self.memory_kernel(tau)))
    }

    /// `E[r(t)]`; the memory drift has mean zero, so this is the Vasicek mean.
    pub fn short_rate_mean(&self, t: f64) -> f64 {
        let decay = (-self.b * t).exp();
        decay * self.r0 - self.a / self.b * (-self.b * t).exp_m1()
    }

    /// `Var[r(t)] = sigma^2 int_0^t (e^{-b(t-s)} - l(s) m'(t-s)/b)^2 ds`.
    pub fn short_rate_variance(&self, t: f64) -> Result<f64> {
        if t <= 0.0 || self.sigma == 0.0 {
            return Ok(0.0);
        }
        let kernel = |s: f64| {
            let k = (-self.b * (t - s)).exp()
                - self.innovation_scale(s) * self.memory_kernel_slope(t - s) / self.b;
            k * k
        };
        let integral = integrate_adaptive(kernel, 0.0, t, DEFAULT_ABS_TOL * 1e-3, DEFAULT_REL_TOL)?;
        Ok(self.sigma * self.sigma * integral.value)
    }

    /// `Var[u(t)] = int_0^t e^{2(p+q)s} l(s)^2 ds`.
    pub fn memory_state_variance(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let integral = integrate_adaptive(
            |s| self.memory_state_diffusion(s).powi(2),
            0.0,
            t,
            DEFAULT_ABS_TOL,
            DEFAULT_REL_TOL,
        )?;
        Ok(integral.value)
    }
}

fn tenor(t: f64, maturity: f64) -> Result<f64> {
    if !(t.is_finite() && maturity.is_finite()) || t < 0.0 || t > maturity {
        return Err(Error::Domain(format!(
            "need 0 <= t <= T (got t = {t}, T = {maturity})"
        )));
    }
    Ok(maturity - t)
}

/// `A`, `C`, `D` for a fixed `(t, T)`; reusable across states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCoefficients {
    pub t: f64,
    pub maturity: f64,
    /// `A(t, T)`.
    pub constant: f64,
    /// `C(t, T)`, non-negative.
    pub rate_loading: f64,
    /// `D(t, T)`.
    pub memory_loading: f64,
}

impl AffineCoefficients {
    pub fn log_price(&self, r: f64, u: f64) -> f64 {
        -self.constant - self.rate_loading * r + self.memory_loading * u
    }

    pub fn price(&self, r: f64, u: f64) -> f64 {
        self.log_price(r, u).exp()
    }
}

/// Point `(t, r, u)` of the two-dimensional Markov system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub t: f64,
    pub r: f64,
    pub u: f64,
}

impl ModelState {
    pub fn new(t: f64, r: f64, u: f64) -> Self {
        Self { t, r, u }
    }

    /// `t = 0`, `r = r0`, `u = 0`.
    pub fn initial(params: &ModelParams) -> Self {
        Self {
            t: 0.0,
            r: params.r0,
            u: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numerics::integrate_adaptive;
    use proptest::prelude::*;

    fn ex1() -> ModelParams {
        fixtures::bond_example(0.03)
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(0.1, 1.0, 0.2, 0.05, 0.1, 0.02).is_ok());
        assert!(ModelParams::new(0.1, 1.0, 0.2, -0.1, 0.1, 0.02).is_err());
        assert!(ModelParams::new(0.1, 1.0, 0.2, 0.05, 0.0, 0.02).is_err());
        assert!(ModelParams::new(0.1, 0.0, 0.2, 0.05, 0.1, 0.02).is_err());
        assert!(ModelParams::new(0.1, 1.0, 0.0, 0.05, 0.1, 0.02).is_err());
        assert!(ModelParams::new(0.1, 1.0, 0.2, 0.05, 0.1, -0.01).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.2, 0.05, 0.1, 0.0).is_err());
        let det = ModelParams { sigma: 0.0, ..ex1() };
        assert!(det.check_structure().is_ok());
    }

    #[test]
    fn innovation_scale_values() {
        let memoryless = ModelParams { p: 0.0, ..ex1() };
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(memoryless.innovation_scale(t), 1.0);
        }
        // l(0) = 1 - p / (2 (p + q))
        let p = ex1();
        let l0 = 1.0 - p.p / (2.0 * (p.p + p.q));
        assert!((p.innovation_scale(0.0) - l0).abs() < 1e-15);
        assert!((l0 - 0.889610).abs() < 1e-6);
        assert!((p.innovation_scale(100.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn innovation_scale_bounds_and_monotone_approach() {
        for (pp, qq) in [(0.034, 0.12), (-0.09, 0.1), (2.0, 0.3), (-0.5, 0.6)] {
            let params = ModelParams { p: pp, q: qq, ..ex1() };
            // l(0) = 1 - p / (2(p + q)) is the extreme value.
            let upper = 1.0f64.max(1.0 - pp / (2.0 * (pp + qq))) * (1.0 + 1e-15);
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let t = i as f64 * 0.05;
                let l = params.innovation_scale(t);
                assert!(l > 0.0 && l <= upper, "l({t}) = {l} for p={pp}, q={qq}");
                let gap = (l - 1.0).abs();
                assert!(gap <= prev + 1e-15);
                prev = gap;
            }
        }
    }

    #[test]
    fn memory_kernel_against_quadrature() {
        let p = ModelParams { b: 1.9, p: 0.034, q: 0.12, ..ex1() };
        assert_eq!(p.memory_kernel(0.0), 0.0);
        let k = p.p + p.q;
        let oracle = integrate_adaptive(
            |s: f64| p.p * (-k * s).exp() * (1.0 - (-p.b * (1.0 - s)).exp()),
            0.0,
            1.0,
            1e-15,
            1e-13,
        )
        .unwrap()
        .value;
        assert!((p.memory_kernel(1.0) - oracle).abs() < 1e-10);
        // high-precision value of m(1)
        assert!((p.memory_kernel(1.0) - 0.017_730_206_084_815_632).abs() < 1e-15);
    }

    #[test]
    fn memory_kernel_vanishes_without_memory() {
        let p = ModelParams { p: 0.0, ..ex1() };
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(p.memory_kernel(t), 0.0);
        }
        // Confluent with p = 0 (q = b) as well.
        let c = ModelParams { p: 0.0, q: 1.9, b: 1.9, ..ex1() };
        assert_eq!(c.memory_kernel(2.0), 0.0);
    }

    #[test]
    fn confluent_branch() {
        // Exactly confluent: p + q = b.
        let p = ModelParams { p: 0.5, q: 1.0, b: 1.5, ..ex1() };
        let oracle = integrate_adaptive(
            |s: f64| 0.5 * (-1.5 * s).exp() * (1.0 - (-1.5 * (2.0 - s)).exp()),
            0.0,
            2.0,
            1e-15,
            1e-13,
        )
        .unwrap()
        .value;
        assert!((p.memory_kernel(2.0) - oracle).abs() < 1e-12);

        // Near confluence both branches agree to the size of the gap.
        for gap in [1e-5, -1e-5] {
            let near = ModelParams { q: 1.0 + gap, ..p };
            for t in [0.1, 1.0, 4.0] {
                let g = near.memory_kernel_generic(t);
                let c = near.memory_kernel_confluent(t);
                assert!((g - c).abs() < 1e-6, "t={t}: {g} vs {c}");
            }
        }
    }

    #[test]
    fn kernel_slope_matches_finite_difference() {
        for params in [ex1(), ModelParams { p: 0.5, q: 1.0, b: 1.5, ..ex1() }] {
            for t in [0.2, 1.0, 3.0] {
                let h = 1e-5;
                let fd = (params.memory_kernel(t + h) - params.memory_kernel(t - h)) / (2.0 * h);
                assert!((params.memory_kernel_slope(t) - fd).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rate_loading_values() {
        let p = ex1();
        assert_eq!(p.rate_loading(0.7, 0.7).unwrap(), 0.0);
        let c = p.rate_loading(0.0, 1.0).unwrap();
        let oracle = integrate_adaptive(|s: f64| (-1.9 * s).exp(), 0.0, 1.0, 1e-15, 1e-13)
            .unwrap()
            .value;
        assert!((c - oracle).abs() < 1e-14);
        assert!((c - 0.447595).abs() < 1e-6);
        assert!((p.rate_loading(0.0, 15.0).unwrap() - 1.0 / 1.9).abs() < 1e-9);
        assert!(matches!(p.rate_loading(1.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn deterministic_term_regression() {
        let p = ex1();
        assert_eq!(p.deterministic_term(1.0, 1.0).unwrap(), 0.0);
        // 40-digit reference value
        let a = p.deterministic_term(0.0, 1.0).unwrap();
        assert!((a - 0.028_895_382_809_751_076).abs() < 1e-13, "{a}");
    }

    #[test]
    fn memory_loading_values() {
        let p = ex1();
        assert_eq!(p.memory_loading(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(ModelParams { p: 0.0, ..p }.memory_loading(0.2, 1.0).unwrap(), 0.0);
        let d = p.memory_loading(0.5, 1.0).unwrap();
        let expected = 0.35 / 1.9 * (-0.077f64).exp() * p.memory_kernel(0.5);
        assert!((d - expected).abs() < 1e-16);
        assert!((d - 0.001_000_000_988_759_428).abs() < 1e-15);
    }

    #[test]
    fn bond_price_basics() {
        let p = ex1();
        let s = ModelState::new(0.4, 0.05, 0.3);
        assert_eq!(p.bond_price(&s, 0.4).unwrap(), 1.0);
        assert!(p.bond_price(&s, 0.3).is_err());
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let price = p.with_r0(0.01 * i as f64).initial_bond_price(1.0).unwrap();
            assert!(price > 0.0 && price < prev);
            prev = price;
        }
    }

    #[test]
    fn yield_and_price_are_inverse() {
        let p = ex1();
        let s = ModelState::new(0.25, 0.04, -0.2);
        for maturity in [0.3, 1.0, 7.5] {
            let y = p.yield_at(&s, maturity).unwrap();
            let price = p.bond_price(&s, maturity).unwrap();
            assert!(((-(maturity - s.t) * y).exp() - price).abs() < 1e-15);
            assert!((-price.ln() / (maturity - s.t) - y).abs() < 1e-13);
        }
        assert!(p.yield_at(&s, 0.25).is_err());
    }

    #[test]
    fn short_tenor_yield_is_short_rate() {
        let p = ex1();
        let s = ModelState::new(0.0, p.r0, 0.0);
        let y = p.yield_at(&s, 1e-6).unwrap();
        assert!((y - p.r0).abs() < 1e-5);
    }

    #[test]
    fn fitted_curve_regression() {
        // Reference yields computed independently with 40-digit quadrature.
        let expected = [
            0.028_130_083_921_089_894,
            0.032_838_207_947_285_598,
            0.034_967_975_202_293_898,
            0.033_526_524_010_838_911,
            0.030_420_432_336_639_573,
            0.030_389_092_428_826_896,
            0.033_089_514_550_987_822,
            0.035_984_473_957_716_389,
            0.039_315_548_848_561_870,
            0.044_640_664_023_196_113,
        ];
        let p = fixtures::FIT_2007_12_31;
        for (maturity, want) in fixtures::TREASURY_MATURITIES.iter().zip(expected) {
            let y = p.initial_yield(*maturity).unwrap();
            assert!((y - want).abs() < 1e-12, "T={maturity}: {y} vs {want}");
        }
    }

    #[test]
    fn discount_vol_values() {
        let p = ModelParams { p: 0.0, sigma: 0.3, b: 1.5, ..ex1() };
        assert_eq!(ex1().discount_vol(0.6, 0.6).unwrap(), 0.0);
        let v = p.discount_vol(0.0, 1.0).unwrap();
        assert!((v - 0.2 * ((-1.5f64).exp() - 1.0)).abs() < 1e-15);
        assert!((v + 0.155374).abs() < 1e-6);
    }

    #[test]
    fn log_price_variance_identity() {
        // -log P(0,T) = (a/b)(T - C) + C r0 - (1/2) int_0^T v(s,T)^2 ds,
        // i.e. the closed form equals the lognormal moment of the discount factor.
        for params in [ex1(), fixtures::option_example(), fixtures::FIT_2008_09_15] {
            for maturity in [0.5, 2.0, 10.0] {
                let c = params.rate_loading(0.0, maturity).unwrap();
                let var = integrate_adaptive(
                    |s| params.discount_vol(s, maturity).unwrap().powi(2),
                    0.0,
                    maturity,
                    1e-15,
                    1e-13,
                )
                .unwrap()
                .value;
                let oracle = params.a / params.b * (maturity - c) + c * params.r0 - 0.5 * var;
                let log_p = -params.initial_bond_price(maturity).unwrap().ln();
                assert!((log_p - oracle).abs() < 1e-11, "{log_p} vs {oracle}");
            }
        }
    }

    #[test]
    fn state_variances_memoryless() {
        let p = ModelParams { p: 0.0, ..ex1() };
        let t = 0.8;
        let u_var = (2.0 * p.q * t).exp_m1() / (2.0 * p.q);
        assert!((p.memory_state_variance(t).unwrap() - u_var).abs() < 1e-13);
        let vasicek = p.sigma * p.sigma * (1.0 - (-2.0 * p.b * t).exp()) / (2.0 * p.b);
        assert!((p.short_rate_variance(t).unwrap() - vasicek).abs() < 1e-14);
        assert_eq!(ModelParams { sigma: 0.0, ..p }.short_rate_variance(t).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn price_is_log_affine_in_state(
            r in -0.1f64..0.2, u in -3.0f64..3.0,
            dr in -0.05f64..0.05, du in -1.0f64..1.0,
            t in 0.0f64..2.0, tau in 0.01f64..5.0,
        ) {
            let p = ex1();
            let maturity = t + tau;
            let ratio = |r: f64, u: f64| {
                let base = p.bond_price(&ModelState::new(t, r, u), maturity).unwrap();
                let bumped = p.bond_price(&ModelState::new(t, r + dr, u + du), maturity).unwrap();
                bumped / base
            };
            let reference = ratio(0.0, 0.0);
            prop_assert!((ratio(r, u) / reference - 1.0).abs() < 1e-13);
        }
    }
}
