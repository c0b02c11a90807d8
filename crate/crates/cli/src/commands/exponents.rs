//! `mqh exponents`: correlation decay exponents from power-law kernel exponents.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use mqhawkes::asymptotics::{predict_exponents, KernelExponents, Regime};
use serde::{Deserialize, Serialize};

use crate::output::{emit, json, Outputs};
use crate::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    NonCritical,
    Critical,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::NonCritical => Regime::NonCritical,
            RegimeArg::Critical => Regime::Critical,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    /// Diagonal kernel exponent epsilon_d.
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_d: Option<f64>,
    /// Off-diagonal kernel exponent epsilon_o.
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_o: Option<f64>,
    /// Diagonal trend exponent rho_d.
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_d: Option<f64>,
    /// Off-diagonal trend exponent rho_o.
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_o: Option<f64>,
    /// Cross-trend exponent rho_x.
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_x: Option<f64>,
    /// Regime [default: non-critical].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeArg>,
    /// Output directory for the report.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn non_critical() -> RegimeArg {
    RegimeArg::NonCritical
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub eps_d: f64,
    pub eps_o: f64,
    pub rho_d: f64,
    pub rho_o: f64,
    pub rho_x: f64,
    #[serde(default = "non_critical")]
    pub regime: RegimeArg,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let input = KernelExponents {
        eps_d: cfg.eps_d,
        eps_o: cfg.eps_o,
        rho_d: cfg.rho_d,
        rho_o: cfg.rho_o,
        rho_x: cfg.rho_x,
        regime: cfg.regime.into(),
    };
    let report = predict_exponents(&input)?;
    if let Some(dir) = &cfg.out {
        let mut out = Outputs::create(dir, "exponents", cfg, None)?;
        out.write("exponents.txt", &report.to_string())?;
        out.write_json("exponents.json", &report)?;
        out.finish()?;
    }
    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&report)?),
        Format::Text => write!(o, "{report}")?,
    }
    emit(&o)?;
    Ok(())
}
