//! Finite-difference solver for the backward term-structure equation
//!
//! ```text
//! G_t + (s^2/2) G_xx + s w(t) G_xy + (w(t)^2/2) G_yy
//!     + (a - b x - s p e^{-(p+q)t} y) G_x - x G = 0,   G(S, x, y) = g(x, y)
//! ```
//!
//! with `x` the short rate, `y` the memory state and `w(t) = e^{(p+q)t} l(t)`.
//! Time stepping is Douglas ADI with `theta = 1/2` plus the Craig–Sneyd
//! correction: the x-operator (diffusion, drift, half the discounting) and the
//! y-operator (diffusion, the other half) are implicit per direction, the
//! mixed derivative is explicit. Coefficients are frozen at the midpoint of
//! each step. On every edge the second
//! derivative across the edge is zero and first derivatives are one-sided.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::solve_tridiagonal_in_place;

const THETA: f64 = 0.5;
const MIN_HALF_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n_time: usize,
    /// Terminal time of the claim.
    pub expiry: f64,
}

impl PdeGrid {
    /// Uniform grid on `[x_lo, x_hi] x [y_lo, y_hi]`.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        x_lo: f64,
        x_hi: f64,
        nx: usize,
        y_lo: f64,
        y_hi: f64,
        ny: usize,
        n_time: usize,
        expiry: f64,
    ) -> Result<Self> {
        let grid = Self {
            x: linspace(x_lo, x_hi, nx),
            y: linspace(y_lo, y_hi, ny),
            n_time,
            expiry,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0 && self.expiry.is_finite()) {
            return Err(Error::Domain(format!("expiry must be positive (got {})", self.expiry)));
        }
        if self.n_time == 0 {
            return Err(Error::Domain("n_time must be at least 1".into()));
        }
        check_axis("x", &self.x)?;
        check_axis("y", &self.y)
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    fn dy(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn contains(&self, r: f64, u: f64) -> bool {
        r >= self.x[0] && r <= self.x[self.nx() - 1] && u >= self.y[0] && u <= self.y[self.ny() - 1]
    }

    /// Same box with `(2 nx - 1, 2 ny - 1, 2 n_time)` nodes: every old node
    /// is kept.
    pub fn refined(&self) -> Self {
        let (nx, ny) = (self.nx(), self.ny());
        Self {
            x: linspace(self.x[0], self.x[nx - 1], 2 * nx - 1),
            y: linspace(self.y[0], self.y[ny - 1], 2 * ny - 1),
            n_time: 2 * self.n_time,
            expiry: self.expiry,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo; n];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + h * i as f64 })
        .collect()
}

fn check_axis(name: &str, nodes: &[f64]) -> Result<()> {
    if nodes.len() < 3 {
        return Err(Error::Domain(format!("{name} axis needs at least 3 nodes")));
    }
    if nodes.iter().any(|v| !v.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!("{name} nodes must be finite and strictly increasing")));
    }
    let h = nodes[1] - nodes[0];
    let span = nodes[nodes.len() - 1] - nodes[0];
    if nodes.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * span) {
        return Err(Error::Domain(format!("{name} nodes must be uniformly spaced")));
    }
    Ok(())
}

/// Box of `width_sd` standard deviations of `(r(S), u(S))` around the mean,
/// stretched to contain `(r0, 0)`.
pub fn default_grid(
    params: &ModelParams,
    expiry: f64,
    width_sd: f64,
    nx: usize,
    ny: usize,
    n_time: usize,
) -> Result<PdeGrid> {
    params.check_structure()?;
    if !(expiry > 0.0 && expiry.is_finite()) {
        return Err(Error::Domain(format!("expiry must be positive (got {expiry})")));
    }
    if !(width_sd > 0.0 && width_sd.is_finite()) {
        return Err(Error::Domain(format!("width_sd must be positive (got {width_sd})")));
    }
    let mean = params.short_rate_mean(expiry);
    let half_x = (width_sd * params.short_rate_variance(expiry)?.sqrt()).max(MIN_HALF_WIDTH);
    let half_y = (width_sd * params.memory_state_variance(expiry)?.sqrt()).max(MIN_HALF_WIDTH);
    PdeGrid::uniform(
        mean.min(params.r0) - half_x,
        mean.max(params.r0) + half_x,
        nx,
        -half_y,
        half_y,
        ny,
        n_time,
        expiry,
    )
}

/// [`default_grid`] with six standard deviations on a 201 x 201 x 400 grid.
pub fn standard_grid(params: &ModelParams, expiry: f64) -> Result<PdeGrid> {
    default_grid(params, expiry, 6.0, 201, 201, 400)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeDiagnostics {
    /// Largest diffusion number `dt * max(s^2/dx^2, w^2/dy^2)` over the solve.
    pub max_courant: f64,
    /// Largest rate of change of `G` on the edges, relative to `max |g|`.
    pub boundary_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    /// `G(0, x_i, y_j)` stored x-major: index `i * ny + j`.
    pub surface: Vec<f64>,
    pub grid: PdeGrid,
    pub diagnostics: PdeDiagnostics,
}

impl PdeSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.surface[i * self.grid.ny() + j]
    }

    /// Bilinear interpolation of the surface.
    pub fn value_at(&self, r: f64, u: f64) -> Result<f64> {
        let g = &self.grid;
        if !self.grid.contains(r, u) {
            return Err(Error::OutsideGrid { r, u });
        }
        let (i, wx) = bracket(&g.x, r);
        let (j, wy) = bracket(&g.y, u);
        let f00 = self.at(i, j);
        let f01 = self.at(i, j + 1);
        let f10 = self.at(i + 1, j);
        let f11 = self.at(i + 1, j + 1);
        Ok((1.0 - wx) * ((1.0 - wy) * f00 + wy * f01) + wx * ((1.0 - wy) * f10 + wy * f11))
    }
}

/// Left node of the cell holding `v` and the weight of the right node.
fn bracket(nodes: &[f64], v: f64) -> (usize, f64) {
    let i = nodes.partition_point(|&n| n <= v).clamp(1, nodes.len() - 1) - 1;
    (i, (v - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

/// Coefficients of the split operators at one instant.
struct Coefficients<'a> {
    grid: &'a PdeGrid,
    half_var_x: f64,
    cross: f64,
    half_var_y: f64,
    a: f64,
    b: f64,
    coupling: f64,
}

impl<'a> Coefficients<'a> {
    fn at(params: &ModelParams, grid: &'a PdeGrid, t: f64) -> Self {
        let w = params.memory_state_diffusion(t);
        Self {
            grid,
            half_var_x: 0.5 * params.sigma * params.sigma,
            cross: params.sigma * w,
            half_var_y: 0.5 * w * w,
            a: params.a,
            b: params.b,
            coupling: params.memory_drift_coupling(t),
        }
    }

    fn drift(&self, i: usize, j: usize) -> f64 {
        self.a - self.b * self.grid.x[i] - self.coupling * self.grid.y[j]
    }

    /// Row `i` of the x-operator on the line `j`: (sub, diag, sup).
    fn x_row(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let n = self.grid.nx();
        let h = self.grid.dx();
        let mu = self.drift(i, j);
        let disc = -0.5 * self.grid.x[i];
        if i == 0 {
            (0.0, -mu / h + disc, mu / h)
        } else if i == n - 1 {
            (-mu / h, mu / h + disc, 0.0)
        } else {
            let d = self.half_var_x / (h * h);
            let c = mu / (2.0 * h);
            (d - c, -2.0 * d + disc, d + c)
        }
    }

    /// Row `j` of the y-operator on the line `i`.
    fn y_row(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let n = self.grid.ny();
        let disc = -0.5 * self.grid.x[i];
        if j == 0 || j == n - 1 {
            (0.0, disc, 0.0)
        } else {
            let h = self.grid.dy();
            let d = self.half_var_y / (h * h);
            (d, -2.0 * d + disc, d)
        }
    }
}

struct Workspace {
    ax: Vec<f64>,
    ay: Vec<f64>,
    a0: Vec<f64>,
    stage: Vec<f64>,
    corrected: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(nx: usize, ny: usize) -> Self {
        let n = nx.max(ny);
        Self {
            ax: vec![0.0; nx * ny],
            ay: vec![0.0; nx * ny],
            a0: vec![0.0; nx * ny],
            stage: vec![0.0; nx * ny],
            corrected: vec![0.0; nx * ny],
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }
}

fn apply_x(c: &Coefficients, g: &[f64], out: &mut [f64]) {
    let (nx, ny) = (c.grid.nx(), c.grid.ny());
    for i in 0..nx {
        for j in 0..ny {
            let (l, d, u) = c.x_row(i, j);
            let mut v = d * g[i * ny + j];
            if i > 0 {
                v += l * g[(i - 1) * ny + j];
            }
            if i + 1 < nx {
                v += u * g[(i + 1) * ny + j];
            }
            out[i * ny + j] = v;
        }
    }
}

fn apply_y(c: &Coefficients, g: &[f64], out: &mut [f64]) {
    let (nx, ny) = (c.grid.nx(), c.grid.ny());
    for i in 0..nx {
        for j in 0..ny {
            let (l, d, u) = c.y_row(i, j);
            let mut v = d * g[i * ny + j];
            if j > 0 {
                v += l * g[i * ny + j - 1];
            }
            if j + 1 < ny {
                v += u * g[i * ny + j + 1];
            }
            out[i * ny + j] = v;
        }
    }
}

/// Mixed derivative term; one-sided across an edge.
fn apply_cross(c: &Coefficients, g: &[f64], out: &mut [f64]) {
    let (nx, ny) = (c.grid.nx(), c.grid.ny());
    for i in 0..nx {
        let (im, ip) = (i.saturating_sub(1), (i + 1).min(nx - 1));
        let hx = c.grid.x[ip] - c.grid.x[im];
        for j in 0..ny {
            let (jm, jp) = (j.saturating_sub(1), (j + 1).min(ny - 1));
            let hy = c.grid.y[jp] - c.grid.y[jm];
            let gxy = (g[ip * ny + jp] - g[ip * ny + jm] - g[im * ny + jp] + g[im * ny + jm]) / (hx * hy);
            out[i * ny + j] = c.cross * gxy;
        }
    }
}

/// The two implicit directional sweeps shared by both stages:
/// `(I - theta dt Ax) Y1 = Y0 - theta dt Ax U`, then
/// `(I - theta dt Ay) Y2 = Y1 - theta dt Ay U`, in place on `y`.
fn directional_sweeps(c: &Coefficients, dt: f64, ws: &mut Workspace, target: Target) -> Result<()> {
    let (nx, ny) = (c.grid.nx(), c.grid.ny());
    let Workspace { ax, ay, stage, corrected, sub, diag, sup, rhs, scratch, .. } = ws;
    let y = match target {
        Target::Stage => stage,
        Target::Corrected => corrected,
    };
    for j in 0..ny {
        for i in 0..nx {
            let (l, d, u) = c.x_row(i, j);
            sub[i] = -THETA * dt * l;
            diag[i] = 1.0 - THETA * dt * d;
            sup[i] = -THETA * dt * u;
            rhs[i] = y[i * ny + j] - THETA * dt * ax[i * ny + j];
        }
        solve_tridiagonal_in_place(&sub[1..nx], &diag[..nx], &sup[..nx - 1], &mut rhs[..nx], &mut scratch[..nx])?;
        for i in 0..nx {
            y[i * ny + j] = rhs[i];
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let (l, d, u) = c.y_row(i, j);
            sub[j] = -THETA * dt * l;
            diag[j] = 1.0 - THETA * dt * d;
            sup[j] = -THETA * dt * u;
            rhs[j] = y[i * ny + j] - THETA * dt * ay[i * ny + j];
        }
        solve_tridiagonal_in_place(&sub[1..ny], &diag[..ny], &sup[..ny - 1], &mut rhs[..ny], &mut scratch[..ny])?;
        y[i * ny..(i + 1) * ny].copy_from_slice(&rhs[..ny]);
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Target {
    Stage,
    Corrected,
}

/// Evolve `g` from `t = S` back to `t = 0`.
///
/// Each step is a Douglas stage followed by the Craig–Sneyd correction,
/// which re-applies the explicit mixed term at the stage value and repeats
/// the implicit sweeps. Plain Douglas is only first order in time once the
/// mixed derivative is present; the correction restores second order.
pub fn solve<F>(params: &ModelParams, expiry: f64, terminal: F, grid: &PdeGrid) -> Result<PdeSolution>
where
    F: Fn(f64, f64) -> f64,
{
    params.check_structure()?;
    grid.validate()?;
    if (grid.expiry - expiry).abs() > 1e-12 * expiry.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "grid expiry {} does not match the claim expiry {expiry}",
            grid.expiry
        )));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut g = Vec::with_capacity(nx * ny);
    for &x in &grid.x {
        for &y in &grid.y {
            let v = terminal(x, y);
            if !v.is_finite() {
                return Err(Error::Domain(format!("terminal value is not finite at ({x}, {y})")));
            }
            g.push(v);
        }
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let dt = expiry / grid.n_time as f64;
    let mut ws = Workspace::new(nx, ny);
    let mut diagnostics = PdeDiagnostics {
        max_courant: 0.0,
        boundary_flux: 0.0,
    };
    let (dx, dy) = (grid.dx(), grid.dy());

    for step in 0..grid.n_time {
        // Step from t_{n+1} down to t_n; coefficients at the midpoint.
        let t_mid = expiry - (step as f64 + 0.5) * dt;
        let c = Coefficients::at(params, grid, t_mid);
        diagnostics.max_courant = diagnostics
            .max_courant
            .max(dt * (2.0 * c.half_var_x / (dx * dx)).max(2.0 * c.half_var_y / (dy * dy)));

        apply_x(&c, &g, &mut ws.ax);
        apply_y(&c, &g, &mut ws.ay);
        apply_cross(&c, &g, &mut ws.a0);
        for k in 0..nx * ny {
            ws.stage[k] = g[k] + dt * (ws.ax[k] + ws.ay[k] + ws.a0[k]);
        }
        ws.corrected.copy_from_slice(&ws.stage);
        directional_sweeps(&c, dt, &mut ws, Target::Stage)?;

        // Corrector: Y0 + theta dt (A0 Y2 - A0 U), swept again.
        let mut cross_at_stage = std::mem::take(&mut ws.ax);
        apply_cross(&c, &ws.stage, &mut cross_at_stage);
        for k in 0..nx * ny {
            ws.corrected[k] += THETA * dt * (cross_at_stage[k] - ws.a0[k]);
        }
        // A_x U is needed again by the second sweep.
        apply_x(&c, &g, &mut cross_at_stage);
        ws.ax = cross_at_stage;
        directional_sweeps(&c, dt, &mut ws, Target::Corrected)?;

        let mut edge_change = 0.0f64;
        let mut max_abs = 0.0f64;
        let mut finite = true;
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                let v = ws.corrected[k];
                if i == 0 || i == nx - 1 || j == 0 || j == ny - 1 {
                    edge_change = edge_change.max((v - g[k]).abs());
                }
                finite &= v.is_finite();
                max_abs = max_abs.max(v.abs());
            }
        }
        std::mem::swap(&mut g, &mut ws.corrected);
        diagnostics.boundary_flux = diagnostics.boundary_flux.max(edge_change / (dt * scale));
        if !finite || max_abs > 1e12 * scale {
            return Err(Error::PdeDiverged {
                step: step + 1,
                max_abs,
            });
        }
    }

    Ok(PdeSolution {
        surface: g,
        grid: grid.clone(),
        diagnostics,
    })
}
