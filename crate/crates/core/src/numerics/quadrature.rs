//! Adaptive Gauss–Kronrod (G7/K15) quadrature with global bisection.
//!
//! The panel with the largest error estimate is split until the summed error
//! estimate drops below `max(abs_tol, rel_tol * |value|)` or the panel budget
//! is exhausted. Error estimates follow the QUADPACK rescaling of `|K15 - G7|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute tolerance used wherever an integral feeds a price.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
/// Relative tolerance used wherever an integral feeds a price.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Hard cap on the number of panels (2^14).
pub const MAX_PANELS: usize = 1 << 14;

// Non-negative Kronrod abscissae; index 0 is the centre. Gauss nodes sit at
// the odd positions of XGK (0.405..., 0.741..., 0.949...) plus the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always non-negative.
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken on position so that the split order is deterministic.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteIntegrand { abscissa: x })
    }
}

/// One G7/K15 panel. Returns (kronrod value, rescaled error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let fc = eval(f, centre)?;
    let mut result_k = fc * WGK[7];
    let mut result_g = fc * WG[3];
    let mut result_abs = result_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(f, centre - dx)?;
        let f2 = eval(f, centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        result_k += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * result_k;
    let mut result_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = result_k * half;
    result_abs *= half.abs();
    result_asc *= half.abs();
    let mut error = ((result_k - result_g) * half).abs();

    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * result_abs);
    }
    Ok((value, error))
}

/// Integrate `f` over `[lo, hi]` to `max(abs_tol, rel_tol * |value|)`.
///
/// A non-finite value of `f` aborts with the offending abscissa; exhausting
/// [`MAX_PANELS`] yields [`Error::QuadratureNotConverged`] carrying the best
/// estimate reached.
pub fn integrate_adaptive<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Domain(format!(
            "integration interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    if !(abs_tol > 0.0) || !(rel_tol >= 0.0) {
        return Err(Error::Domain(format!(
            "tolerances must satisfy abs_tol > 0 and rel_tol >= 0 (got {abs_tol}, {rel_tol})"
        )));
    }
    if lo == hi {
        // Evaluate once so that the evaluation count is never zero.
        eval(&mut f, lo)?;
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 1,
        });
    }

    let (value, error) = gk15(&mut f, lo, hi)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { lo, hi, value, error });
    let mut total = value;
    let mut total_err = error;

    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged {
                estimate: total,
                error_estimate: total_err,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Panel cannot be split any further in floating point.
            return Err(Error::QuadratureNotConverged {
                estimate: total,
                error_estimate: total_err,
                panels: heap.len() + 1,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.hi)?;
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Panel { lo: mid, hi: worst.hi, value: v2, error: e2 });
    }

    // Re-sum from the panels to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error_estimate: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error_estimate: error_estimate.max(0.0),
        evaluations,
    })
}

/// [`integrate_adaptive`] at the default pricing tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<QuadResult> {
    integrate_adaptive(f, lo, hi, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_is_exact() {
        let r = integrate(|_| 1.0, 0.0, 1.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.error_estimate >= 0.0);
        assert!(r.evaluations >= 1);
    }

    #[test]
    fn exponential_against_antiderivative() {
        let r = integrate(|x: f64| (-x).exp(), 0.0, 1.0).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((r.value - exact).abs() < 1e-14, "{} vs {exact}", r.value);
    }

    #[test]
    fn degenerate_interval() {
        let r = integrate(|x: f64| x.sin(), 2.0, 2.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn reversed_interval_rejected() {
        assert!(matches!(integrate(|x| x, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nan_reports_abscissa() {
        let err = integrate(|x: f64| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0).unwrap_err();
        match err {
            Error::NonFiniteIntegrand { abscissa } => assert!(abscissa > 0.5 && abscissa <= 1.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn singular_integrand_runs_out_of_panels() {
        // 1/sqrt(x) is integrable but the error estimate stalls near zero
        // relative to a tolerance far below rounding.
        let err = integrate_adaptive(|x: f64| 1.0 / (x + 1e-300).sqrt(), 0.0, 1.0, 1e-300, 0.0)
            .unwrap_err();
        match err {
            Error::QuadratureNotConverged { estimate, .. } => {
                assert!((estimate - 2.0).abs() < 1e-3, "best estimate {estimate}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn oscillatory_integrand_needs_subdivision() {
        let r = integrate(|x: f64| (50.0 * x).cos(), 0.0, 3.0).unwrap();
        let exact = (150.0f64).sin() / 50.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.evaluations > 15);
    }
}
