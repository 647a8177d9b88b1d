//! Options and runners of the subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use memvasicek_core::calibration::{calibrate, calibrate_nested, CalibrationOptions, QuoteSet};
use memvasicek_core::option::value_option;
use memvasicek_core::pde::{default_grid, solve, PdeGrid};
use memvasicek_core::simulation::{mc_bond_price, simulate, Scheme, SimConfig};
use memvasicek_core::{fixtures, io as core_io, ModelParams, OptionSpec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::svg::{line_chart, Series};
use crate::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Zero-coupon bond test case with r0 = 0.05.
    Example1,
    /// Bond option test case.
    Example2,
    #[value(name = "fit-2007-12-31")]
    #[serde(rename = "fit-2007-12-31")]
    Fit20071231,
    #[value(name = "fit-2005-05-24")]
    #[serde(rename = "fit-2005-05-24")]
    Fit20050524,
    #[value(name = "fit-2008-09-15")]
    #[serde(rename = "fit-2008-09-15")]
    Fit20080915,
}

impl Preset {
    fn params(self) -> ModelParams {
        match self {
            Preset::Example1 => fixtures::bond_example(0.05),
            Preset::Example2 => fixtures::option_example(),
            Preset::Fit20071231 => fixtures::FIT_2007_12_31,
            Preset::Fit20050524 => fixtures::FIT_2005_05_24,
            Preset::Fit20080915 => fixtures::FIT_2008_09_15,
        }
    }
}

/// Model parameters: a preset, with any individual parameter overridden.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArgs {
    /// Parameter set the individual flags start from.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Mean-reversion level numerator.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Mean-reversion speed.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Short-rate volatility.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Memory strength.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Memory decay rate.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Initial short rate.
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
}

impl ModelArgs {
    fn resolved(self, default: Preset) -> Result<Self> {
        let preset = self.preset.unwrap_or(default);
        let base = preset.params();
        let out = Self {
            preset: Some(preset),
            a: Some(self.a.unwrap_or(base.a)),
            b: Some(self.b.unwrap_or(base.b)),
            sigma: Some(self.sigma.unwrap_or(base.sigma)),
            p: Some(self.p.unwrap_or(base.p)),
            q: Some(self.q.unwrap_or(base.q)),
            r0: Some(self.r0.unwrap_or(base.r0)),
        };
        out.params()?;
        Ok(out)
    }

    fn params(&self) -> Result<ModelParams> {
        let get = |v: Option<f64>, name: &str| v.with_context(|| format!("parameter {name} is unresolved"));
        Ok(ModelParams::new(
            get(self.a, "a")?,
            get(self.b, "b")?,
            get(self.sigma, "sigma")?,
            get(self.p, "p")?,
            get(self.q, "q")?,
            get(self.r0, "r0")?,
        )?)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_quotes(path: Option<&Path>, percent: bool) -> Result<QuoteSet> {
    let path = path.context("--quotes is required")?;
    Ok(core_io::parse_quotes(path, percent)?)
}

fn positive(value: f64, name: &str) -> Result<f64> {
    if !(value > 0.0 && value.is_finite()) {
        bail!("{name} must be positive (got {value})");
    }
    Ok(value)
}

fn at_least(value: usize, min: usize, name: &str) -> Result<usize> {
    if value < min {
        bail!("{name} must be at least {min} (got {value})");
    }
    Ok(value)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    /// Market quotes to fit (CSV `maturity_years,yield`); adds fitted columns.
    #[arg(long)]
    pub quotes: Option<PathBuf>,
    /// Quote yields are in percent.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub percent: Option<bool>,
    /// Number of evenly spaced maturities.
    #[arg(long)]
    pub points: Option<usize>,
    /// Longest maturity on the grid (defaults to the longest quote, else 20).
    #[arg(long)]
    pub max_maturity: Option<f64>,
    /// Random restarts per fit.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw the curves as an SVG chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl Run for CurveArgs {
    fn resolved(self) -> Result<Self> {
        let percent = self.percent.unwrap_or(false);
        let longest = match &self.quotes {
            Some(q) => core_io::parse_quotes(q, percent)?.maturities().last().copied(),
            None => None,
        };
        Ok(Self {
            model: self.model.resolved(Preset::Fit20071231)?,
            percent: Some(percent),
            points: Some(at_least(self.points.unwrap_or(40), 1, "points")?),
            max_maturity: Some(positive(self.max_maturity.or(longest).unwrap_or(20.0), "max_maturity")?),
            restarts: Some(self.restarts.unwrap_or(CalibrationOptions::default().n_restarts)),
            seed: Some(self.seed.unwrap_or(0)),
            ..self
        })
    }

    fn run(&self) -> Result<()> {
        let (points, max) = (self.points.unwrap_or(40), self.max_maturity.unwrap_or(20.0));
        let mut grid: Vec<f64> = (1..=points).map(|k| max * k as f64 / points as f64).collect();

        let mut w = csv::Writer::from_writer(output(self.out.as_deref())?);
        let mut chart = Vec::new();
        match &self.quotes {
            None => {
                let params = self.model.params()?;
                w.write_record(["T", "Y_model"])?;
                let mut line = Vec::new();
                for &t in &grid {
                    let y = params.initial_yield(t)?;
                    w.write_record([t.to_string(), y.to_string()])?;
                    line.push((t, y));
                }
                chart.push(Series { label: "model", points: line, markers: false });
            }
            Some(path) => {
                let quotes = read_quotes(Some(path), self.percent.unwrap_or(false))?;
                let opts = CalibrationOptions {
                    n_restarts: self.restarts.unwrap_or(20),
                    seed: self.seed.unwrap_or(0),
                    ..CalibrationOptions::default()
                };
                let (classical, full) = calibrate_nested(&quotes, &opts)?;
                eprintln!("fit sse: full {:e}, classical {:e}", full.sse, classical.sse);
                grid.extend(quotes.maturities());
                grid.sort_by(f64::total_cmp);
                grid.dedup();

                w.write_record(["T", "Y_model", "Y_vasicek_fit", "y_market"])?;
                let (mut model_line, mut classical_line) = (Vec::new(), Vec::new());
                for &t in &grid {
                    let ym = full.params.initial_yield(t)?;
                    let yc = classical.params.initial_yield(t)?;
                    let market = quotes.quotes().iter().find(|q| q.maturity == t).map(|q| q.rate);
                    w.write_record([
                        t.to_string(),
                        ym.to_string(),
                        yc.to_string(),
                        market.map(|m| m.to_string()).unwrap_or_default(),
                    ])?;
                    model_line.push((t, ym));
                    classical_line.push((t, yc));
                }
                let market = quotes.quotes().iter().map(|q| (q.maturity, q.rate)).collect();
                chart.push(Series { label: "memory model", points: model_line, markers: false });
                chart.push(Series { label: "classical fit", points: classical_line, markers: false });
                chart.push(Series { label: "market", points: market, markers: true });
            }
        }
        w.flush()?;
        if let Some(path) = &self.svg {
            std::fs::write(path, line_chart("Yield curve", "maturity (years)", "yield", &chart))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    /// Bond maturity in years.
    #[arg(long)]
    pub maturity: Option<f64>,
    /// JSON destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Run for BondArgs {
    fn resolved(self) -> Result<Self> {
        Ok(Self {
            model: self.model.resolved(Preset::Example1)?,
            maturity: Some(positive(
                self.maturity.unwrap_or(fixtures::BOND_EXAMPLE_MATURITY),
                "maturity",
            )?),
            ..self
        })
    }

    fn run(&self) -> Result<()> {
        let params = self.model.params()?;
        let maturity = self.maturity.unwrap_or(fixtures::BOND_EXAMPLE_MATURITY);
        let price = params.initial_bond_price(maturity)?;
        let rate = params.initial_yield(maturity)?;
        write_json(
            self.out.as_deref(),
            &json!({ "maturity": maturity, "price": price, "yield": rate }),
        )
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    /// Option expiry in years.
    #[arg(long)]
    pub expiry: Option<f64>,
    /// Maturity of the underlying bond.
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
    /// JSON destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OptionArgs {
    fn spec(&self) -> Result<OptionSpec> {
        Ok(OptionSpec::call(
            self.expiry.context("expiry is unresolved")?,
            self.maturity.context("maturity is unresolved")?,
            self.strike.context("strike is unresolved")?,
        )?)
    }
}

impl Run for OptionArgs {
    fn resolved(self) -> Result<Self> {
        let out = Self {
            model: self.model.resolved(Preset::Example2)?,
            expiry: Some(self.expiry.unwrap_or(fixtures::OPTION_EXAMPLE_EXPIRY)),
            maturity: Some(self.maturity.unwrap_or(fixtures::OPTION_EXAMPLE_MATURITY)),
            strike: Some(self.strike.unwrap_or(fixtures::OPTION_EXAMPLE_STRIKE)),
            ..self
        };
        out.spec()?;
        Ok(out)
    }

    fn run(&self) -> Result<()> {
        let spec = self.spec()?;
        let v = value_option(&spec, &self.model.params()?)?;
        write_json(
            self.out.as_deref(),
            &json!({
                "expiry": spec.expiry,
                "maturity": spec.maturity,
                "strike": spec.strike,
                "call": v.call,
                "put": v.put,
                "d_plus": v.d_plus,
                "d_minus": v.d_minus,
                "sigma_sq": v.sigma_sq,
                "discount_expiry": v.discount_expiry,
                "discount_maturity": v.discount_maturity,
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Euler,
    ExactGaussian,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::ExactGaussian => Scheme::ExactGaussian,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    /// Simulation horizon; the bond estimate matures here.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Path CSV destination (`t,path_id,r,u,int_r`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Estimate JSON destination (stdout when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl SimulateArgs {
    fn config(&self) -> SimConfig {
        SimConfig::new(
            self.horizon.unwrap_or(1.0),
            self.steps.unwrap_or(256),
            self.paths.unwrap_or(10_000),
            self.seed.unwrap_or(0),
        )
        .with_scheme(self.scheme.unwrap_or(SchemeArg::Euler).into())
    }
}

impl Run for SimulateArgs {
    fn resolved(self) -> Result<Self> {
        let out = Self {
            model: self.model.resolved(Preset::Example1)?,
            horizon: Some(self.horizon.unwrap_or(1.0)),
            steps: Some(self.steps.unwrap_or(256)),
            paths: Some(self.paths.unwrap_or(10_000)),
            seed: Some(self.seed.unwrap_or(0)),
            scheme: Some(self.scheme.unwrap_or(SchemeArg::Euler)),
            ..self
        };
        out.config().validate()?;
        Ok(out)
    }

    fn run(&self) -> Result<()> {
        let params = self.model.params()?;
        let cfg = self.config();
        let mc = mc_bond_price(&params, cfg.horizon, &cfg)?;
        let exact = params.initial_bond_price(cfg.horizon)?;
        if let Some(path) = &self.out {
            let paths = simulate(&params, &cfg)?;
            core_io::write_paths_csv(&paths, output(Some(path))?)?;
        }
        write_json(
            self.summary.as_deref(),
            &json!({
                "horizon": cfg.horizon,
                "n_steps": cfg.n_steps,
                "n_paths": cfg.n_paths,
                "seed": cfg.seed,
                "scheme": cfg.scheme,
                "bond_estimate": mc.estimate,
                "bond_std_error": mc.std_error,
                "bond_exact": exact,
                "z_score": mc.z_score(exact),
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    /// Zero-coupon bond paying 1 at maturity.
    Bond,
    /// European call on a zero-coupon bond.
    Call,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub claim: Option<Claim>,
    /// Call expiry (a bond expires at its maturity).
    #[arg(long)]
    pub expiry: Option<f64>,
    #[arg(long)]
    pub maturity: Option<f64>,
    /// Call strike.
    #[arg(long)]
    pub strike: Option<f64>,
    /// First initial rate of the sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub r0_from: Option<f64>,
    /// Last initial rate of the sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub r0_to: Option<f64>,
    #[arg(long)]
    pub r0_step: Option<f64>,
    /// Half-width of the grid in standard deviations of the state.
    #[arg(long)]
    pub width_sd: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Number of time steps.
    #[arg(long)]
    pub n_time: Option<usize>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the whole surface (`x,y,G`) at time zero.
    #[arg(long)]
    pub surface: Option<PathBuf>,
}

impl PdeArgs {
    fn sweep(&self) -> Result<Vec<f64>> {
        let (from, to, step) = (
            self.r0_from.unwrap_or(0.0),
            self.r0_to.unwrap_or(0.1),
            self.r0_step.unwrap_or(0.01),
        );
        if !(from.is_finite() && to >= from && step > 0.0) {
            bail!("r0 sweep needs r0_from <= r0_to and r0_step > 0");
        }
        let n = ((to - from) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            bail!("r0 sweep of {n} points is too long");
        }
        Ok((0..=n).map(|k| from + step * k as f64).collect())
    }

    fn option_spec(&self) -> Result<Option<OptionSpec>> {
        let maturity = self.maturity.context("maturity is unresolved")?;
        match self.claim {
            Some(Claim::Call) => Ok(Some(OptionSpec::call(
                self.expiry.context("expiry is unresolved")?,
                maturity,
                self.strike.context("strike is unresolved")?,
            )?)),
            _ => Ok(None),
        }
    }

    /// Default box around the first and last rates of the sweep, merged.
    fn grid(&self, params: &ModelParams, sweep: &[f64], expiry: f64) -> Result<PdeGrid> {
        let build = |r0: f64| {
            default_grid(
                &params.with_r0(r0),
                expiry,
                self.width_sd.unwrap_or(6.0),
                self.nx.unwrap_or(201),
                self.ny.unwrap_or(201),
                self.n_time.unwrap_or(400),
            )
        };
        let lo = build(sweep[0])?;
        let hi = build(sweep[sweep.len() - 1])?;
        Ok(PdeGrid::uniform(
            lo.x[0].min(hi.x[0]),
            lo.x[lo.nx() - 1].max(hi.x[hi.nx() - 1]),
            lo.nx(),
            lo.y[0],
            lo.y[lo.ny() - 1],
            lo.ny(),
            lo.n_time,
            expiry,
        )?)
    }
}

impl Run for PdeArgs {
    fn resolved(self) -> Result<Self> {
        let claim = self.claim.unwrap_or(Claim::Bond);
        let (preset, maturity) = match claim {
            Claim::Bond => (Preset::Example1, fixtures::BOND_EXAMPLE_MATURITY),
            Claim::Call => (Preset::Example2, fixtures::OPTION_EXAMPLE_MATURITY),
        };
        let maturity = self.maturity.unwrap_or(maturity);
        let (expiry, strike) = match claim {
            Claim::Bond => (maturity, None),
            Claim::Call => (
                self.expiry.unwrap_or(fixtures::OPTION_EXAMPLE_EXPIRY),
                Some(self.strike.unwrap_or(fixtures::OPTION_EXAMPLE_STRIKE)),
            ),
        };
        if claim == Claim::Bond && (self.expiry.is_some_and(|e| e != maturity) || self.strike.is_some()) {
            bail!("a bond claim takes neither expiry nor strike other than its maturity");
        }
        let out = Self {
            model: self.model.resolved(preset)?,
            claim: Some(claim),
            expiry: Some(positive(expiry, "expiry")?),
            maturity: Some(positive(maturity, "maturity")?),
            strike,
            r0_from: Some(self.r0_from.unwrap_or(0.0)),
            r0_to: Some(self.r0_to.unwrap_or(0.1)),
            r0_step: Some(self.r0_step.unwrap_or(0.01)),
            width_sd: Some(positive(self.width_sd.unwrap_or(6.0), "width_sd")?),
            nx: Some(at_least(self.nx.unwrap_or(201), 3, "nx")?),
            ny: Some(at_least(self.ny.unwrap_or(201), 3, "ny")?),
            n_time: Some(at_least(self.n_time.unwrap_or(400), 1, "n_time")?),
            ..self
        };
        out.sweep()?;
        out.option_spec()?;
        Ok(out)
    }

    fn run(&self) -> Result<()> {
        let params = self.model.params()?;
        let sweep = self.sweep()?;
        let spec = self.option_spec()?;
        let maturity = self.maturity.context("maturity is unresolved")?;
        let expiry = spec.map_or(maturity, |s| s.expiry);
        let grid = self.grid(&params, &sweep, expiry)?;

        let solution = match spec {
            None => solve(&params, expiry, |_, _| 1.0, &grid)?,
            Some(s) => {
                let bond = params.affine(s.expiry, s.maturity)?;
                solve(&params, expiry, |x, y| (bond.price(x, y) - s.strike).max(0.0), &grid)?
            }
        };
        eprintln!(
            "grid {}x{}x{}, max courant {:.3e}, boundary flux {:.3e}",
            grid.nx(),
            grid.ny(),
            grid.n_time,
            solution.diagnostics.max_courant,
            solution.diagnostics.boundary_flux
        );

        let mut w = csv::Writer::from_writer(output(self.out.as_deref())?);
        w.write_record(["r0", "pde_value", "exact_value"])?;
        for &r0 in &sweep {
            let at = params.with_r0(r0);
            let exact = match spec {
                None => at.initial_bond_price(maturity)?,
                Some(s) => value_option(&s, &at)?.call,
            };
            let pde = solution.value_at(r0, 0.0)?;
            w.write_record([r0.to_string(), pde.to_string(), exact.to_string()])?;
        }
        w.flush()?;
        if let Some(path) = &self.surface {
            core_io::write_surface_csv(&solution, output(Some(path))?)?;
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    /// Market quotes (CSV `maturity_years,yield`).
    #[arg(long)]
    pub quotes: Option<PathBuf>,
    /// Quote yields are in percent.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub percent: Option<bool>,
    /// Random restarts after the first search.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit the memoryless model only (p = 0).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub restricted: Option<bool>,
    /// JSON destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Run for CalibrateArgs {
    fn resolved(self) -> Result<Self> {
        let percent = self.percent.unwrap_or(false);
        read_quotes(self.quotes.as_deref(), percent)?;
        let defaults = CalibrationOptions::default();
        Ok(Self {
            percent: Some(percent),
            restarts: Some(self.restarts.unwrap_or(defaults.n_restarts)),
            seed: Some(self.seed.unwrap_or(defaults.seed)),
            restricted: Some(self.restricted.unwrap_or(defaults.restricted)),
            ..self
        })
    }

    fn run(&self) -> Result<()> {
        let quotes = read_quotes(self.quotes.as_deref(), self.percent.unwrap_or(false))?;
        let defaults = CalibrationOptions::default();
        let opts = CalibrationOptions {
            n_restarts: self.restarts.unwrap_or(defaults.n_restarts),
            seed: self.seed.unwrap_or(defaults.seed),
            restricted: self.restricted.unwrap_or(defaults.restricted),
            ..defaults
        };
        let result = calibrate(&quotes, &opts)?;
        let mut w = output(self.out.as_deref())?;
        core_io::write_calibration_json(&result, &mut w)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
