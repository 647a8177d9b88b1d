//! File formats: yield quotes in, paths, PDE surfaces and fits out.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::calibration::{CalibrationResult, QuoteSet, YieldQuote};
use crate::error::{Error, Result};
use crate::pde::PdeSolution;
use crate::simulation::PathSet;

pub const QUOTES_HEADER: [&str; 2] = ["maturity_years", "yield"];

/// Read a quotes CSV with header `maturity_years,yield`.
///
/// With `percent` the yields are divided by 100 on the way in.
pub fn parse_quotes(path: &Path, percent: bool) -> Result<QuoteSet> {
    let file = File::open(path)?;
    read_quotes(file, percent).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// [`parse_quotes`] on any reader; parse errors carry an empty path.
pub fn read_quotes<R: Read>(reader: R, percent: bool) -> Result<QuoteSet> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: Default::default(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(parse_err(1, "empty file".into()));
    }
    if header.iter().collect::<Vec<_>>() != QUOTES_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{}`", QUOTES_HEADER.join(",")),
        ));
    }
    let scale = if percent { 0.01 } else { 1.0 };
    let mut quotes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<f64> {
            let raw = record.get(k).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{raw}` is not a number")))
        };
        let quote = YieldQuote::new(field(0)?, field(1)? * scale)
            .map_err(|e| parse_err(line, e.to_string()))?;
        quotes.push(quote);
    }
    if quotes.is_empty() {
        return Err(parse_err(1, "no quotes after the header".into()));
    }
    QuoteSet::new(quotes).map_err(|e| parse_err(0, e.to_string()))
}

/// Long-format path dump: `t,path_id,r,u,int_r`.
pub fn write_paths_csv<W: Write>(paths: &PathSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "path_id", "r", "u", "int_r"])?;
    for (id, path) in paths.paths.iter().enumerate() {
        for (k, t) in paths.times.iter().enumerate() {
            w.serialize((t, id, path.r[k], path.u[k], path.int_r[k]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Surface dump at `t = 0`: `x,y,G`.
pub fn write_surface_csv<W: Write>(solution: &PdeSolution, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "G"])?;
    for (i, x) in solution.grid.x.iter().enumerate() {
        for (j, y) in solution.grid.y.iter().enumerate() {
            w.serialize((x, y, solution.at(i, j)))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Flat JSON record of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport<'a> {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub r0: f64,
    pub sse: f64,
    pub converged: bool,
    pub residuals: &'a [f64],
    pub iterations: usize,
    pub restarts_used: usize,
    pub underdetermined: bool,
}

impl<'a> From<&'a CalibrationResult> for CalibrationReport<'a> {
    fn from(r: &'a CalibrationResult) -> Self {
        let p = r.params;
        Self {
            a: p.a,
            b: p.b,
            sigma: p.sigma,
            p: p.p,
            q: p.q,
            r0: p.r0,
            sse: r.sse,
            converged: r.converged,
            residuals: &r.residuals,
            iterations: r.iterations,
            restarts_used: r.restarts_used,
            underdetermined: r.underdetermined,
        }
    }
}

pub fn write_calibration_json<W: Write>(result: &CalibrationResult, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &CalibrationReport::from(result))?;
    Ok(())
}
