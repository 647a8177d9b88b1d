//! Shared numerical kernels.

mod nelder_mead;
mod normal;
mod quadrature;
mod tridiagonal;

pub use nelder_mead::{nelder_mead, NelderMead, OptimResult};
pub use normal::{norm_cdf, norm_pdf};
pub use quadrature::{
    integrate, integrate_adaptive, QuadResult, DEFAULT_ABS_TOL, DEFAULT_REL_TOL, MAX_PANELS,
};
pub use tridiagonal::{solve_tridiagonal, solve_tridiagonal_in_place};
