//! Vasicek-type short-rate model driven by a Gaussian process with memory.
//!
//! Three independent engines price the same claims: closed forms
//! ([`model`], [`option`]), Monte Carlo on the two-dimensional Markov
//! system ([`simulation`]) and an ADI finite-difference solver for the
//! term-structure equation ([`pde`]). [`calibration`] fits the time-0
//! yield curve to market quotes.

pub mod calibration;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod numerics;
pub mod option;
pub mod pde;
pub mod simulation;

pub use calibration::{calibrate, calibrate_nested, CalibrationOptions, CalibrationResult, QuoteSet, YieldQuote};
pub use error::{Error, Result};
pub use model::{AffineCoefficients, ModelParams, ModelState};
pub use option::{OptionKind, OptionSpec, OptionValuation};
pub use pde::{PdeDiagnostics, PdeGrid, PdeSolution};
pub use simulation::{McEstimate, PathRecord, PathSet, PathState, Scheme, SimConfig};
