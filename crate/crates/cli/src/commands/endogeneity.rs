//! `mqh endogeneity`: stability class, positivity check and mean intensities of a
//! specification.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mqhawkes::model::{
    check_positivity, endogeneity, mean_intensity, EndogeneityReport, MeanIntensity, ModelSpec, PositivityReport,
};
use serde::{Deserialize, Serialize};

use crate::output::{emit, float, json, line, Outputs};
use crate::Format;

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    /// TOML model specification.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    /// Lags of the positivity grid [default: 64].
    #[arg(long, value_name = "Q")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Spacing of the positivity grid [default: 0.1].
    #[arg(long, value_name = "DT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Output directory for the report.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_q() -> usize {
    64
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub spec: PathBuf,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    endogeneity: EndogeneityReport,
    positivity: PositivityReport,
    /// Absent when the model has no finite stationary mean.
    mean_intensity: Option<MeanIntensity>,
    mean_intensity_error: Option<String>,
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let spec = ModelSpec::load(&cfg.spec).with_context(|| format!("specification {}", cfg.spec.display()))?;
    let endo = endogeneity(&spec)?;
    let positivity = check_positivity(&spec, cfg.q, cfg.dt);
    let (mean, mean_err) = match mean_intensity(&spec) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = Report { endogeneity: endo, positivity, mean_intensity: mean, mean_intensity_error: mean_err };
    if let Some(dir) = &cfg.out {
        let mut out = Outputs::create(dir, "endogeneity", cfg, None)?;
        out.input(&cfg.spec)?;
        out.write_json("endogeneity.json", &report)?;
        out.finish()?;
    }
    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&report)?),
        Format::Text => {
            let e = &report.endogeneity;
            o.push_str(&line("n_h", float(e.n_h)));
            o.push_str(&line("n_total", float(e.n_total)));
            o.push_str(&line("class", format!("{:?}", e.classification)));
            let p = &report.positivity;
            o.push_str(&line("positive", p.ok));
            o.push_str(&line("deficit", float(p.deficit)));
            o.push_str(&line("truncated", float(p.truncated_fraction)));
            match (&report.mean_intensity, &report.mean_intensity_error) {
                (Some(m), _) => {
                    let rates: Vec<String> = m.assets.iter().map(|v| float(*v)).collect();
                    o.push_str(&line("mean_rates", rates.join(" ")));
                    if let Some(c) = m.cojump {
                        o.push_str(&line("cojump_rate", float(c)));
                    }
                }
                (None, Some(err)) => o.push_str(&line("mean_rates", format!("undefined: {err}"))),
                (None, None) => {}
            }
        }
    }
    emit(&o)?;
    Ok(())
}
