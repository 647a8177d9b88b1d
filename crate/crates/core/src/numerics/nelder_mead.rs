//! Derivative-free simplex minimisation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x_best: Vec<f64>,
    /// Objective at `x_best` (never NaN; rejected points count as +inf).
    pub f_best: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest Euclidean distance from the best vertex to any other vertex.
    pub simplex_diameter: f64,
}

/// Nelder–Mead configuration.
///
/// With `adaptive` set, the expansion/contraction/shrink coefficients scale
/// with the dimension (Gao & Han), which behaves better beyond 2-3 variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub tol_f: f64,
    pub tol_x: f64,
    pub max_iter: usize,
    pub adaptive: bool,
}

impl NelderMead {
    pub fn new(tol_f: f64, tol_x: f64, max_iter: usize) -> Self {
        Self {
            tol_f,
            tol_x,
            max_iter,
            adaptive: false,
        }
    }

    pub fn adaptive(mut self, on: bool) -> Self {
        self.adaptive = on;
        self
    }

    pub fn minimize<F>(&self, mut objective: F, x0: &[f64], step0: &[f64]) -> Result<OptimResult>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        if n == 0 || step0.len() != n {
            return Err(Error::Dimension(format!(
                "start point has {n} coordinates, step has {}",
                step0.len()
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        let mut eval = |x: &[f64]| {
            let v = objective(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let f0 = eval(x0);
        if !f0.is_finite() {
            return Err(Error::Domain("objective is not finite at the start point".into()));
        }

        let nf = n as f64;
        let (alpha, gamma, beta, delta) = if self.adaptive && n > 1 {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
        } else {
            (1.0, 2.0, 0.5, 0.5)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut x = x0.to_vec();
            let h = if step0[i] != 0.0 {
                step0[i]
            } else if x0[i] != 0.0 {
                0.05 * x0[i]
            } else {
                2.5e-4
            };
            x[i] += h;
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let mut iterations = 0;
        let mut centroid = vec![0.0; n];
        let converged = loop {
            // Stable sort keeps earlier vertices first among ties.
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread <= self.tol_f || diameter(&simplex) < self.tol_x {
                break true;
            }
            if iterations >= self.max_iter {
                break false;
            }
            iterations += 1;

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let along = |t: f64, towards: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(towards)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let worst = simplex[n].0.clone();
            let f_worst = simplex[n].1;
            let xr = along(-alpha, &worst);
            let fr = eval(&xr);

            if fr < simplex[0].1 {
                let xe = along(gamma, &xr);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc, accept) = if fr < f_worst {
                let xc = along(beta, &xr);
                let fc = eval(&xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = along(beta, &worst);
                let fc = eval(&xc);
                (xc, fc, fc < f_worst)
            };
            if accept {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for (x, fx) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = bi + delta * (*xi - bi);
                }
                *fx = eval(x);
            }
        };

        let simplex_diameter = diameter(&simplex);
        let (x_best, f_best) = simplex.swap_remove(0);
        Ok(OptimResult {
            x_best,
            f_best,
            iterations,
            converged,
            simplex_diameter,
        })
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Standard-coefficient Nelder–Mead from `x0` with initial edge lengths `step0`.
pub fn nelder_mead<F>(
    objective: F,
    x0: &[f64],
    step0: &[f64],
    tol_f: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> f64,
{
    NelderMead::new(tol_f, tol_x, max_iter).minimize(objective, x0, step0)
}
