//! Monte Carlo simulation of the Markov pair `(r, u)`.
//!
//! ```text
//! dr = (a - b r - sigma p e^{-(p+q)t} u) dt + sigma dW
//! du = e^{(p+q)t} l(t) dW
//! ```
//!
//! Both components share one Brownian increment per step. Every path draws
//! from its own ChaCha8 stream `(seed, path_index)`, so results are bitwise
//! reproducible whatever the number of worker threads. The money-market
//! exponent `int_0^t r ds` is accumulated with the trapezoidal rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::integrate_adaptive;

// Per-step moment integrals of the exact scheme; their magnitudes scale with
// the step length, so the absolute floor is far below the grid spacing.
const MOMENT_ABS_TOL: f64 = 1e-17;
const MOMENT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler–Maruyama.
    #[default]
    Euler,
    /// Exact Gaussian transition of the linear system over each step.
    ExactGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(horizon: f64, n_steps: usize, n_paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            n_steps,
            n_paths,
            seed,
            scheme: Scheme::Euler,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive (got {})", self.horizon)));
        }
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::Domain("n_steps and n_paths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        grid(self.horizon, self.n_steps)
    }
}

fn grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|i| horizon * i as f64 / n_steps as f64)
        .collect()
}

/// State carried along a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub r: f64,
    pub u: f64,
    /// Running `int_0^t r ds`.
    pub int_r: f64,
}

impl PathState {
    fn initial(params: &ModelParams) -> Self {
        Self {
            r: params.r0,
            u: 0.0,
            int_r: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.r.is_finite() && self.u.is_finite() && self.int_r.is_finite()
    }

    pub fn discount(&self) -> f64 {
        (-self.int_r).exp()
    }
}

/// One simulated trajectory on the configured grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathRecord {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub int_r: Vec<f64>,
}

impl PathRecord {
    fn with_capacity(n: usize) -> Self {
        Self {
            r: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            int_r: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, s: &PathState) {
        self.r.push(s.r);
        self.u.push(s.u);
        self.int_r.push(s.int_r);
    }

    pub fn state(&self, step: usize) -> PathState {
        PathState {
            r: self.r[step],
            u: self.u[step],
            int_r: self.int_r[step],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub paths: Vec<PathRecord>,
    pub seed: u64,
}

/// Sample mean of a discounted payoff with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            estimate: mean,
            std_error,
            n_paths: n,
        }
    }

    /// Number of standard errors separating the estimate from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value) / self.std_error
    }
}

/// The RNG stream of one path.
pub fn path_rng(seed: u64, path_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index as u64);
    rng
}

/// The Brownian increments the Euler scheme draws for `path_index`.
pub fn brownian_increments(seed: u64, path_index: usize, n_steps: usize, dt: f64) -> Vec<f64> {
    let mut rng = path_rng(seed, path_index);
    let scale = dt.sqrt();
    (0..n_steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect()
}

/// Sum consecutive pairs: the same Brownian path on a grid twice as coarse.
pub fn coarsen_increments(dw: &[f64]) -> Vec<f64> {
    dw.chunks(2).map(|c| c.iter().sum()).collect()
}

#[derive(Debug, Clone, Copy)]
struct EulerCoefficients {
    coupling: f64,
    u_diffusion: f64,
}

#[derive(Debug, Clone, Copy)]
struct ExactStep {
    rate_decay: f64,
    level: f64,
    u_coupling: f64,
    chol_rr: f64,
    chol_ur: f64,
    chol_uu: f64,
}

#[derive(Debug, Clone)]
enum Stepper {
    Euler(Vec<EulerCoefficients>),
    Exact(Vec<ExactStep>),
}

#[derive(Debug, Clone)]
struct Engine {
    params: ModelParams,
    dt: f64,
    stepper: Stepper,
}

impl Engine {
    fn new(params: &ModelParams, cfg: &SimConfig) -> Result<Self> {
        params.check_structure()?;
        cfg.validate()?;
        let times = cfg.times();
        let dt = cfg.dt();
        let stepper = match cfg.scheme {
            Scheme::Euler => Stepper::Euler(euler_coefficients(params, &times)),
            Scheme::ExactGaussian => Stepper::Exact(
                times
                    .windows(2)
                    .map(|w| exact_step(params, w[0], w[1] - w[0]))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self {
            params: *params,
            dt,
            stepper,
        })
    }

    /// Run one path, calling `visit(step, state)` at every grid point.
    fn run(
        &self,
        path_index: usize,
        seed: u64,
        mut visit: impl FnMut(usize, &PathState),
    ) -> Result<PathState> {
        let mut rng = path_rng(seed, path_index);
        let mut state = PathState::initial(&self.params);
        visit(0, &state);
        let sqrt_dt = self.dt.sqrt();
        let n = match &self.stepper {
            Stepper::Euler(c) => c.len() - 1,
            Stepper::Exact(s) => s.len(),
        };
        for step in 0..n {
            state = match &self.stepper {
                Stepper::Euler(coeffs) => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    euler_step(&self.params, &coeffs[step], &state, self.dt, sqrt_dt * z)
                }
                Stepper::Exact(steps) => {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    exact_transition(&steps[step], &state, self.dt, z1, z2)
                }
            };
            if !state.is_finite() {
                return Err(Error::SimulationDiverged {
                    path: path_index,
                    step: step + 1,
                });
            }
            visit(step + 1, &state);
        }
        Ok(state)
    }
}

fn euler_coefficients(params: &ModelParams, times: &[f64]) -> Vec<EulerCoefficients> {
    times
        .iter()
        .map(|&t| EulerCoefficients {
            coupling: params.memory_drift_coupling(t),
            u_diffusion: params.memory_state_diffusion(t),
        })
        .collect()
}

fn euler_step(params: &ModelParams, c: &EulerCoefficients, s: &PathState, dt: f64, dw: f64) -> PathState {
    let r = s.r + (params.a - params.b * s.r - c.coupling * s.u) * dt + params.sigma * dw;
    let u = s.u + c.u_diffusion * dw;
    PathState {
        r,
        u,
        int_r: s.int_r + 0.5 * (s.r + r) * dt,
    }
}

fn exact_transition(step: &ExactStep, s: &PathState, dt: f64, z1: f64, z2: f64) -> PathState {
    let r = step.rate_decay * s.r + step.level - step.u_coupling * s.u + step.chol_rr * z1;
    let u = s.u + step.chol_ur * z1 + step.chol_uu * z2;
    PathState {
        r,
        u,
        int_r: s.int_r + 0.5 * (s.r + r) * dt,
    }
}

/// Mean map and Cholesky factor of the `(r, u)` transition over `[t, t + h]`.
fn exact_step(params: &ModelParams, t: f64, h: f64) -> Result<ExactStep> {
    let ModelParams { a, b, sigma, p, q, .. } = *params;
    let end = t + h;
    // Weight of dW(s) in r(t + h), net of the memory feedback.
    let rate_kernel =
        |s: f64| (-b * (end - s)).exp() - params.innovation_scale(s) * params.memory_kernel_slope(end - s) / b;
    let integral = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(integrate_adaptive(f, t, end, MOMENT_ABS_TOL, MOMENT_REL_TOL)?.value)
    };
    let var_r = sigma * sigma * integral(&|s| rate_kernel(s).powi(2))?;
    let cov = sigma * integral(&|s| rate_kernel(s) * params.memory_state_diffusion(s))?;
    let var_u = integral(&|s| params.memory_state_diffusion(s).powi(2))?;

    let chol_rr = var_r.max(0.0).sqrt();
    let chol_ur = if chol_rr > 0.0 { cov / chol_rr } else { 0.0 };
    let chol_uu = (var_u - chol_ur * chol_ur).max(0.0).sqrt();
    Ok(ExactStep {
        rate_decay: (-b * h).exp(),
        level: -a / b * (-b * h).exp_m1(),
        u_coupling: sigma * (-(p + q) * t).exp() * params.memory_kernel_slope(h) / b,
        chol_rr,
        chol_ur,
        chol_uu,
    })
}

/// Simulate and store every path on the grid.
///
/// Memory is `3 * n_paths * (n_steps + 1)` floats; the Monte Carlo
/// estimators below stream paths instead.
pub fn simulate(params: &ModelParams, cfg: &SimConfig) -> Result<PathSet> {
    let engine = Engine::new(params, cfg)?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut record = PathRecord::with_capacity(cfg.n_steps + 1);
            engine.run(i, cfg.seed, |_, s| record.push(s))?;
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet {
        times: cfg.times(),
        paths,
        seed: cfg.seed,
    })
}

/// States at the requested grid indices, per path: `out[path][k]` is the
/// state at `steps[k]`.
pub fn sample_states(params: &ModelParams, cfg: &SimConfig, steps: &[usize]) -> Result<Vec<Vec<PathState>>> {
    if let Some(&bad) = steps.iter().find(|&&s| s > cfg.n_steps) {
        return Err(Error::Domain(format!(
            "step {bad} is beyond the grid of {} steps",
            cfg.n_steps
        )));
    }
    let engine = Engine::new(params, cfg)?;
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![PathState::initial(params); steps.len()];
            engine.run(i, cfg.seed, |step, s| {
                for (slot, &want) in out.iter_mut().zip(steps) {
                    if want == step {
                        *slot = *s;
                    }
                }
            })?;
            Ok(out)
        })
        .collect()
}

/// `E[exp(-int_0^S r ds) g(r(S), u(S))]` with `S = cfg.horizon`.
pub fn mc_claim_price<G>(params: &ModelParams, expiry: f64, payoff: G, cfg: &SimConfig) -> Result<McEstimate>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    check_horizon(expiry, cfg)?;
    let engine = Engine::new(params, cfg)?;
    let samples = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let end = engine.run(i, cfg.seed, |_, _| {})?;
            Ok(end.discount() * payoff(end.r, end.u))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(&samples))
}

/// `P(0, T) = E[exp(-int_0^T r ds)]`.
pub fn mc_bond_price(params: &ModelParams, maturity: f64, cfg: &SimConfig) -> Result<McEstimate> {
    mc_claim_price(params, maturity, |_, _| 1.0, cfg)
}

fn check_horizon(expiry: f64, cfg: &SimConfig) -> Result<()> {
    if (expiry - cfg.horizon).abs() > 1e-12 * expiry.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "simulation horizon {} does not match the claim expiry {expiry}",
            cfg.horizon
        )));
    }
    Ok(())
}

/// Euler path driven by the given Brownian increments on a uniform grid.
pub fn euler_path(params: &ModelParams, dt: f64, dw: &[f64]) -> PathRecord {
    let times = grid(dt * dw.len() as f64, dw.len());
    let coeffs = euler_coefficients(params, &times);
    let mut state = PathState::initial(params);
    let mut record = PathRecord::with_capacity(dw.len() + 1);
    record.push(&state);
    for (c, &w) in coeffs.iter().zip(dw) {
        state = euler_step(params, c, &state, dt, w);
        record.push(&state);
    }
    record
}

/// Discrete check of the `u`-representation of the memory integral.
///
/// Along an Euler path, accumulates
/// `int_0^t (e^{qs} - p/(p+2q) e^{-qs}) dZ(s)` with
/// `dZ = dW - p e^{-(p+q)s} u(s) ds` and subtracts
/// `(e^{-pt}/l(t)) (1 - p e^{-2qt}/(p+2q)) u(t)`. The result is zero in
/// continuous time and `O(dt)` on the grid.
pub fn z_integral_residual(params: &ModelParams, dt: f64, dw: &[f64]) -> Vec<f64> {
    let ModelParams { p, q, .. } = *params;
    let ratio = p / (p + 2.0 * q);
    let path = euler_path(params, dt, dw);
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(dw.len() + 1);
    out.push(0.0);
    for (i, &w) in dw.iter().enumerate() {
        let s = i as f64 * dt;
        let weight = (q * s).exp() - ratio * (-q * s).exp();
        let dz = w - p * (-(p + q) * s).exp() * path.u[i] * dt;
        integral += weight * dz;
        let t = (i + 1) as f64 * dt;
        let factor =
            (-p * t).exp() / params.innovation_scale(t) * (1.0 - ratio * (-2.0 * q * t).exp());
        out.push(integral - factor * path.u[i + 1]);
    }
    out
}
