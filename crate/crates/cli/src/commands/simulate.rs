//! `mqh simulate`: event stream from a model specification.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mqhawkes::model::ModelSpec;
use mqhawkes::simulate::{sidecar_path, simulate_events_with, SimOptions};
use serde::{Deserialize, Serialize};

use crate::output::{emit, json, line, Outputs};
use crate::Format;

pub const EVENTS_FILE: &str = "events.csv";

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    /// TOML model specification.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    /// Simulation horizon.
    #[arg(long, value_name = "T")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Random seed [default: 0].
    #[arg(long, value_name = "S")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Abort once the intensity bound exceeds this value [default: 10^6 × total baseline].
    #[arg(long, value_name = "X")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explosion_cap: Option<f64>,
    /// Abort after this many events.
    #[arg(long, value_name = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_events: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub spec: PathBuf,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default)]
    pub explosion_cap: Option<f64>,
    #[serde(default)]
    pub max_events: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Summary {
    events: usize,
    jumps: usize,
    cojumps: usize,
    counts: Vec<usize>,
    horizon: f64,
    seed: u64,
    spec_digest: String,
    out: PathBuf,
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let spec = ModelSpec::load(&cfg.spec).with_context(|| format!("specification {}", cfg.spec.display()))?;
    let mut options = SimOptions::for_spec(&spec);
    if let Some(cap) = cfg.explosion_cap {
        options.explosion_cap = cap;
    }
    if let Some(n) = cfg.max_events {
        options.max_events = n;
    }
    let stream = simulate_events_with(&spec, cfg.horizon, cfg.seed, options).context("simulation failed")?;

    let mut out = Outputs::create(&cfg.out, "simulate", cfg, Some(cfg.seed))?;
    out.input(&cfg.spec)?;
    let events = out.dir().join(EVENTS_FILE);
    stream.write_csv(&events)?;
    out.record(EVENTS_FILE)?;
    let side = sidecar_path(&events);
    out.record(&side.file_name().expect("sidecar has a name").to_string_lossy())?;
    out.finish()?;

    let summary = Summary {
        events: stream.events.len(),
        jumps: stream.jump_count(),
        cojumps: stream.cojump_count(),
        counts: stream.counts(),
        horizon: stream.horizon,
        seed: stream.seed,
        spec_digest: stream.spec_digest.clone(),
        out: cfg.out.clone(),
    };
    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&summary)?),
        Format::Text => {
            o.push_str(&line("events", summary.events));
            o.push_str(&line("cojumps", summary.cojumps));
            o.push_str(&line("counts", format!("{:?}", summary.counts)));
            o.push_str(&line("horizon", summary.horizon));
            o.push_str(&line("seed", summary.seed));
            o.push_str(&line("spec_digest", &summary.spec_digest));
            o.push_str(&line("written", events.display()));
        }
    }
    emit(&o)?;
    Ok(())
}
