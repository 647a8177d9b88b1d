//! Least-squares fit of the time-0 yield curve.
//!
//! The search runs Nelder–Mead in an unconstrained coordinate system
//! `a = e^alpha, b = e^beta, sigma = e^s, q = e^kappa, p = -q + e^pi,
//! r0 = e^rho`, so every point of `R^6` is an admissible parameter set.
//! Restarts begin from the best point found so far with a freshly randomized
//! simplex, which lets the search escape the flat valleys of the objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::NelderMead;

/// Quotes below this are treated as data errors.
pub const YIELD_FLOOR: f64 = -0.05;
/// Free parameters of the full model.
pub const FULL_DIMENSION: usize = 6;
/// Free parameters with the memory switched off (`a, b, sigma, r0`).
pub const RESTRICTED_DIMENSION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldQuote {
    pub maturity: f64,
    #[serde(rename = "yield")]
    pub rate: f64,
}

impl YieldQuote {
    pub fn new(maturity: f64, rate: f64) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::Input(format!("maturity must be positive (got {maturity})")));
        }
        if !(rate > YIELD_FLOOR && rate.is_finite()) {
            return Err(Error::Input(format!("yield {rate} is below the floor {YIELD_FLOOR}")));
        }
        Ok(Self { maturity, rate })
    }
}

/// Non-empty quotes sorted by maturity, no two at the same maturity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuoteSet {
    quotes: Vec<YieldQuote>,
}

impl QuoteSet {
    pub fn new(mut quotes: Vec<YieldQuote>) -> Result<Self> {
        if quotes.is_empty() {
            return Err(Error::Input("no yield quotes".into()));
        }
        for q in &quotes {
            YieldQuote::new(q.maturity, q.rate)?;
        }
        quotes.sort_by(|x, y| x.maturity.total_cmp(&y.maturity));
        if let Some(w) = quotes.windows(2).find(|w| w[0].maturity == w[1].maturity) {
            return Err(Error::Input(format!("duplicate maturity {}", w[0].maturity)));
        }
        Ok(Self { quotes })
    }

    /// Quotes generated by the model itself at the given maturities.
    pub fn from_model(params: &ModelParams, maturities: &[f64]) -> Result<Self> {
        let quotes = maturities
            .iter()
            .map(|&t| Ok(YieldQuote { maturity: t, rate: params.initial_yield(t)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(quotes)
    }

    pub fn quotes(&self) -> &[YieldQuote] {
        &self.quotes
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn maturities(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.maturity).collect()
    }
}

/// Model minus market, one entry per quote.
pub fn residuals(params: &ModelParams, quotes: &QuoteSet) -> Result<Vec<f64>> {
    quotes
        .quotes
        .iter()
        .map(|q| Ok(params.initial_yield(q.maturity)? - q.rate))
        .collect()
}

/// Sum of squared yield errors; `+inf` for inadmissible parameters.
pub fn objective(params: &ModelParams, quotes: &QuoteSet) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    match residuals(params, quotes) {
        Ok(res) => {
            let sse: f64 = res.iter().map(|r| r * r).sum();
            if sse.is_finite() {
                sse
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Map unconstrained coordinates to parameters.
///
/// Full: `[alpha, beta, s, kappa, pi, rho]`. Restricted:
/// `[alpha, beta, s, rho]` with `p = 0` and `q` taken from `frozen_q`.
pub fn from_unconstrained(z: &[f64], frozen_q: f64) -> ModelParams {
    match z.len() {
        FULL_DIMENSION => {
            let q = z[3].exp();
            ModelParams {
                a: z[0].exp(),
                b: z[1].exp(),
                sigma: z[2].exp(),
                p: z[4].exp() - q,
                q,
                r0: z[5].exp(),
            }
        }
        RESTRICTED_DIMENSION => ModelParams {
            a: z[0].exp(),
            b: z[1].exp(),
            sigma: z[2].exp(),
            p: 0.0,
            q: frozen_q,
            r0: z[3].exp(),
        },
        n => panic!("unconstrained vector must have 4 or 6 coordinates, got {n}"),
    }
}

/// Inverse of [`from_unconstrained`]; `None` if `params` lies outside the
/// image (e.g. `r0 <= 0`).
pub fn to_unconstrained(params: &ModelParams, restricted: bool) -> Option<Vec<f64>> {
    let ln = |v: f64| if v > 0.0 && v.is_finite() { Some(v.ln()) } else { None };
    let z = if restricted {
        vec![ln(params.a)?, ln(params.b)?, ln(params.sigma)?, ln(params.r0)?]
    } else {
        vec![
            ln(params.a)?,
            ln(params.b)?,
            ln(params.sigma)?,
            ln(params.q)?,
            ln(params.p + params.q)?,
            ln(params.r0)?,
        ]
    };
    Some(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub n_restarts: usize,
    pub seed: u64,
    /// Fix `p = 0` (classical Vasicek) and fit `a, b, sigma, r0`.
    pub restricted: bool,
    pub init: Option<ModelParams>,
    /// Iteration budget of each Nelder–Mead run.
    pub max_iter: usize,
    pub tol_f: f64,
    pub tol_x: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            n_restarts: 20,
            seed: 0,
            restricted: false,
            init: None,
            max_iter: 4000,
            tol_f: 1e-22,
            tol_x: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub sse: f64,
    /// Model minus market per quote.
    pub residuals: Vec<f64>,
    /// Nelder–Mead iterations summed over restarts.
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Fewer quotes than free parameters.
    pub underdetermined: bool,
}

/// Starting point centred in the usual fitted regimes.
pub fn default_init(quotes: &QuoteSet) -> ModelParams {
    let short = quotes.quotes[0].rate;
    let long = quotes.quotes[quotes.len() - 1].rate;
    let b = 1.5;
    ModelParams {
        a: (b * long).max(1e-4),
        b,
        sigma: 0.3,
        p: 0.05,
        q: 0.1,
        r0: if short > 0.0 { short } else { 1e-4 },
    }
}

/// Fit the model to `quotes`; deterministic given `opts`.
pub fn calibrate(quotes: &QuoteSet, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    if opts.n_restarts == 0 {
        return Err(Error::Input("n_restarts must be at least 1".into()));
    }
    let mut init = opts.init.unwrap_or_else(|| default_init(quotes));
    if opts.restricted {
        init.p = 0.0;
    }
    let z0 = to_unconstrained(&init, opts.restricted).ok_or_else(|| {
        Error::InvalidParams(format!("initial guess {init:?} lies outside the search region"))
    })?;
    let frozen_q = init.q;
    let f = |z: &[f64]| objective(&from_unconstrained(z, frozen_q), quotes);

    let optimizer = NelderMead::new(opts.tol_f, opts.tol_x, opts.max_iter).adaptive(true);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_z = z0.clone();
    let mut best_f = f(&z0);
    let mut iterations = 0;
    let mut converged = false;

    for restart in 0..opts.n_restarts {
        let step: Vec<f64> = if restart == 0 {
            vec![0.2; z0.len()]
        } else {
            (0..z0.len())
                .map(|_| {
                    let size = rng.random_range(0.02..0.5);
                    if rng.random_bool(0.5) { size } else { -size }
                })
                .collect()
        };
        let start = best_z.clone();
        let run = match optimizer.minimize(f, &start, &step) {
            Ok(run) => run,
            // Only a non-finite start can fail, and the start is always the
            // best point so far; keep going with the next simplex.
            Err(_) => continue,
        };
        iterations += run.iterations;
        converged |= run.converged;
        if run.f_best < best_f {
            best_f = run.f_best;
            best_z = run.x_best;
        }
    }

    let params = from_unconstrained(&best_z, frozen_q);
    let residuals = residuals(&params, quotes)?;
    let sse = residuals.iter().map(|r| r * r).sum();
    let dim = if opts.restricted { RESTRICTED_DIMENSION } else { FULL_DIMENSION };
    Ok(CalibrationResult {
        params,
        sse,
        residuals,
        iterations,
        converged: converged && best_f.is_finite(),
        restarts_used: opts.n_restarts,
        underdetermined: quotes.len() < dim,
    })
}

/// Classical fit and full fit. The full search runs once from the usual
/// start and once from the classical optimum, keeping the better, so the
/// full model's error never exceeds the classical one.
pub fn calibrate_nested(
    quotes: &QuoteSet,
    opts: &CalibrationOptions,
) -> Result<(CalibrationResult, CalibrationResult)> {
    let restricted = calibrate(quotes, &CalibrationOptions { restricted: true, ..*opts })?;
    let full_opts = CalibrationOptions { restricted: false, ..*opts };
    let direct = calibrate(quotes, &full_opts)?;
    let seeded = calibrate(
        quotes,
        &CalibrationOptions {
            init: Some(restricted.params),
            ..full_opts
        },
    )?;
    let full = if seeded.sse < direct.sse { seeded } else { direct };
    Ok((restricted, full))
}
