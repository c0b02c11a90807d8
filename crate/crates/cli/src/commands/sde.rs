//! `mqh sde`: Euler-Maruyama path of the trend features, angular histogram against the
//! solved profile and Hill index of `|z_1|`.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mqhawkes::estimate::{ChiSquare, HillEstimate};
use mqhawkes::simulate::{SdeOptions, SdeSummary};
use mqhawkes::tail::{profile_bin_mass, sample_sde, solve_alpha, SamplingConfig, TailProblem};
use serde::{Deserialize, Serialize};

use super::tail::{load_problem, one, ProblemFlags};
use crate::output::{emit, float, json, line, Outputs};
use crate::{Format, InvalidInput};

pub const HISTOGRAM_FILE: &str = "theta_hist.csv";
pub const REPORT_FILE: &str = "tail_report.json";

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemFlags,
    /// Time step [default: 0.001].
    #[arg(long, value_name = "DT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Number of steps [default: 1000000].
    #[arg(long, value_name = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Random seed [default: 0].
    #[arg(long, value_name = "S")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Histogram bins on [0, π) [default: 32].
    #[arg(long, value_name = "K")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Steps between angular samples [default: one angular relaxation time].
    #[arg(long, value_name = "K")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    /// Smallest |z| entering the histogram [default: where the quadratic part is 100× the baseline].
    #[arg(long, value_name = "R")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_cut: Option<f64>,
    /// Fraction of steps used as Hill order statistics [default: 0.001].
    #[arg(long, value_name = "F")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hill_fraction: Option<f64>,
    /// Angular grid of the solved profile [default: 256].
    #[arg(long, value_name = "M")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_steps() -> u64 {
    1_000_000
}

fn default_grid() -> usize {
    256
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
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub stride: Option<u64>,
    #[serde(default)]
    pub radius_cut: Option<f64>,
    #[serde(default)]
    pub hill_fraction: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Report {
    problem: TailProblem,
    options: SdeOptions,
    sampling: SamplingConfig,
    summary: SdeSummary,
    angular_samples: u64,
    mean_square: [f64; 2],
    /// Absent when the problem has no power-law tail.
    alpha_solver: Option<f64>,
    mu_predicted: Option<f64>,
    hill: Option<HillEstimate>,
    chi_square: Option<ChiSquare>,
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let problem = load_problem(cfg.nz, cfg.gamma, cfg.omega, cfg.baseline, cfg.problem.as_deref())?;
    if cfg.dt.is_nan() || cfg.dt <= 0.0 || cfg.steps == 0 {
        return Err(InvalidInput("dt and steps must be positive".into()).into());
    }
    let mut sampling = SamplingConfig::for_problem(&problem, cfg.dt, cfg.steps);
    if let Some(b) = cfg.bins {
        sampling.bins = b;
    }
    if let Some(s) = cfg.stride {
        sampling.stride = s;
    }
    if let Some(r) = cfg.radius_cut {
        sampling.radius_cut = r;
    }
    if let Some(f) = cfg.hill_fraction {
        sampling.hill_fraction = f;
    }
    let options = SdeOptions::new(cfg.dt, cfg.steps, cfg.seed);
    // Without quadratic feedback there is no power tail and no admissible exponent.
    let quadratic = problem.a_z.iter().flatten().chain(&problem.a_cross).any(|a| *a != 0.0);
    let solution =
        if quadratic { Some(solve_alpha(&problem, cfg.grid, None).context("solved profile")?) } else { None };
    let sample = sample_sde(&problem, options, sampling).context("diffusion path")?;
    let hist = &sample.histogram;
    let chi_square = match &solution {
        Some(sol) if hist.total() > 0 => sample.chi_square(&sol.f).ok(),
        _ => None,
    };

    let width = PI / hist.counts.len() as f64;
    let mass = solution.as_ref().map(|sol| profile_bin_mass(&sol.f, &hist.edges));
    let mut csv = String::from("theta_lo,theta_hi,theta_mid,count,density,solver_density\n");
    for (k, density) in hist.density().iter().enumerate() {
        let (lo, hi) = (hist.edges[k], hist.edges[k + 1]);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            float(lo),
            float(hi),
            float(0.5 * (lo + hi)),
            hist.counts[k],
            float(*density),
            mass.as_ref().map_or(String::new(), |m| float(m[k] / width))
        ));
    }
    let report = Report {
        problem,
        options,
        sampling: sample.config,
        summary: sample.summary,
        angular_samples: hist.total(),
        mean_square: sample.mean_square,
        alpha_solver: solution.as_ref().map(|s| s.alpha),
        mu_predicted: solution.as_ref().map(|s| s.marginal_exponent()),
        hill: sample.hill,
        chi_square,
    };

    let mut out = Outputs::create(&cfg.out, "sde", cfg, Some(cfg.seed))?;
    if let Some(p) = &cfg.problem {
        out.input(p)?;
    }
    out.write(HISTOGRAM_FILE, &csv)?;
    out.write_json(REPORT_FILE, &report)?;
    out.finish()?;

    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&report)?),
        Format::Text => {
            o.push_str(&line("steps", report.summary.steps));
            o.push_str(&line("clamped", report.summary.clamped));
            o.push_str(&line("samples", report.angular_samples));
            o.push_str(&line(
                "mean_square",
                format!("{} {}", float(report.mean_square[0]), float(report.mean_square[1])),
            ));
            match (report.alpha_solver, report.mu_predicted) {
                (Some(a), Some(mu)) => {
                    o.push_str(&line("alpha_solver", format!("{a:.9}")));
                    o.push_str(&line("mu_predicted", format!("{mu:.9}")));
                }
                _ => o.push_str(&line("alpha_solver", "no power tail")),
            }
            match &report.hill {
                Some(h) => o.push_str(&line("hill_mu", format!("{:.6} ± {:.6} (k = {})", h.mu, h.stderr, h.k))),
                None => o.push_str(&line("hill_mu", "unavailable")),
            }
            match &report.chi_square {
                Some(c) => o.push_str(&line(
                    "chi_square",
                    format!("{:.4} on {} dof, p = {:.4}", c.statistic, c.dof, c.p_value),
                )),
                None => o.push_str(&line("chi_square", "unavailable")),
            }
        }
    }
    emit(&o)?;
    Ok(())
}
