//! `mqh tail`: smallest admissible tail exponent and its angular profile, with optional
//! comparisons against the closed-form limits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mqhawkes::tail::{
    alpha_near_half, alpha_small_gamma, alpha_small_nz, f_infinity, solve_alpha, zeta_large_nz, TailProblem,
    TailSolution,
};
use serde::{Deserialize, Serialize};

use crate::output::{emit, float, json, line, Outputs};
use crate::{Format, InvalidInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compare {
    SmallGamma,
    LargeNz,
    SmallNz,
    NearHalf,
}

/// Symmetric parametrization or a problem file, shared with `mqh sde`.
#[derive(Debug, Args, Serialize)]
pub struct ProblemFlags {
    /// Trend feedback strength of the symmetric problem.
    #[arg(long, value_name = "X", conflicts_with = "problem")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nz: Option<f64>,
    /// Cross-trend coupling of the symmetric problem [default: 0].
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Trend decay rate of the symmetric problem [default: 1].
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Baseline intensity of the symmetric problem [default: 1].
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    /// General problem as TOML or JSON (omega, a_z, a_cross, baseline).
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<PathBuf>,
}

pub fn one() -> f64 {
    1.0
}

/// Builds the problem from the symmetric parameters or from a file.
pub fn load_problem(
    nz: Option<f64>,
    gamma: f64,
    omega: f64,
    baseline: f64,
    file: Option<&Path>,
) -> Result<TailProblem> {
    match (nz, file) {
        (Some(nz), None) => Ok(TailProblem::symmetric(nz, gamma, omega, baseline)?),
        (None, Some(p)) => read_problem(p),
        _ => Err(InvalidInput("give either --nz or --problem".into()).into()),
    }
}

pub fn read_problem(path: &Path) -> Result<TailProblem> {
    let text =
        std::fs::read_to_string(path).map_err(|e| InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let parsed: std::result::Result<TailProblem, String> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let problem = parsed.map_err(|e| InvalidInput(format!("problem {}: {e}", path.display())))?;
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemFlags,
    /// Angular grid size M on [0, π) [default: 512].
    #[arg(long, value_name = "M")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Closed-form limits to compare with; repeatable.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<Compare>,
    /// Output directory for the profile and report.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn default_grid() -> usize {
    512
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub nz: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub baseline: f64,
    #[serde(default)]
    pub problem: Option<PathBuf>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub compare: Vec<Compare>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// One numeric quantity next to its closed-form counterpart.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub limit: Compare,
    pub quantity: &'static str,
    pub numeric: f64,
    pub closed_form: f64,
    pub difference: f64,
    /// Absent when the closed-form value is zero.
    pub relative_difference: Option<f64>,
}

impl Comparison {
    fn new(limit: Compare, quantity: &'static str, numeric: f64, closed_form: f64) -> Self {
        let difference = numeric - closed_form;
        let relative_difference = (closed_form != 0.0).then(|| difference.abs() / closed_form.abs());
        Self { limit, quantity, numeric, closed_form, difference, relative_difference }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub problem: TailProblem,
    pub alpha: f64,
    pub alpha_grid: f64,
    pub grid_change: f64,
    pub marginal_exponent: f64,
    pub eigen_residual: f64,
    pub residual: f64,
    pub grid: usize,
    pub comparisons: Vec<Comparison>,
    pub warnings: Vec<String>,
}

fn compare(limit: Compare, problem: &TailProblem, sol: &TailSolution) -> Result<Vec<Comparison>> {
    let s = problem
        .symmetric
        .ok_or_else(|| InvalidInput("closed-form comparisons need the symmetric problem (--nz)".into()))?;
    let (nz, gamma) = (s.n_z, s.gamma);
    let out = match limit {
        Compare::SmallGamma => vec![Comparison::new(limit, "alpha", sol.alpha, alpha_small_gamma(nz, gamma)?)],
        Compare::NearHalf => vec![Comparison::new(limit, "alpha", sol.alpha, alpha_near_half(nz, gamma)?)],
        Compare::LargeNz => {
            let finf = f_infinity(gamma, sol.m)?;
            let top = finf.iter().fold(0.0f64, |m, v| m.max(*v));
            let sup = sol.f.iter().zip(&finf).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            vec![
                Comparison::new(limit, "alpha", sol.alpha, 2.0 + zeta_large_nz(gamma)? / nz),
                Comparison::new(limit, "profile_sup_relative", sup / top, 0.0),
            ]
        }
        Compare::SmallNz => {
            let approx = alpha_small_nz(nz, gamma)?;
            let k = sol.f.iter().enumerate().fold(0, |b, (k, v)| if *v > sol.f[b] { k } else { b });
            vec![
                Comparison::new(limit, "alpha", sol.alpha, approx.alpha),
                Comparison::new(limit, "profile_peak", sol.theta[k], approx.peak.rem_euclid(PI)),
            ]
        }
    };
    Ok(out)
}

pub fn solve(cfg: &Config) -> Result<(Report, TailSolution)> {
    let problem = load_problem(cfg.nz, cfg.gamma, cfg.omega, cfg.baseline, cfg.problem.as_deref())?;
    if cfg.grid < 8 {
        return Err(InvalidInput(format!("grid {} is too coarse (at least 8)", cfg.grid)).into());
    }
    let sol = solve_alpha(&problem, cfg.grid, None).context("tail exponent")?;
    let mut comparisons = Vec::new();
    for &c in &cfg.compare {
        comparisons.extend(compare(c, &problem, &sol)?);
    }
    let report = Report {
        problem,
        alpha: sol.alpha,
        alpha_grid: sol.alpha_grid,
        grid_change: sol.grid_change,
        marginal_exponent: sol.marginal_exponent(),
        eigen_residual: sol.eigen_residual,
        residual: sol.residual,
        grid: sol.m,
        comparisons,
        warnings: sol.warnings.clone(),
    };
    Ok((report, sol))
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let (report, sol) = solve(cfg)?;
    if let Some(dir) = &cfg.out {
        let mut out = Outputs::create(dir, "tail", cfg, None)?;
        if let Some(p) = &cfg.problem {
            out.input(p)?;
        }
        out.write("profile.csv", &sol.to_csv())?;
        out.write_json("tail.json", &report)?;
        out.finish()?;
    }
    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&report)?),
        Format::Text => {
            o.push_str(&line("alpha", format!("{:.9}", report.alpha)));
            o.push_str(&line("alpha_grid", float(report.alpha_grid)));
            o.push_str(&line("grid_change", float(report.grid_change)));
            o.push_str(&line("mu", format!("{:.9}", report.marginal_exponent)));
            o.push_str(&line("residual", float(report.residual)));
            for c in &report.comparisons {
                let rel = c.relative_difference.map_or("none".to_string(), float);
                writeln!(
                    o,
                    "compare {:?} {} numeric={} closed_form={} difference={} relative_difference={rel}",
                    c.limit,
                    c.quantity,
                    float(c.numeric),
                    float(c.closed_form),
                    float(c.difference),
                )?;
            }
            for w in &report.warnings {
                o.push_str(&line("warning", w));
            }
        }
    }
    emit(&o)?;
    Ok(())
}
