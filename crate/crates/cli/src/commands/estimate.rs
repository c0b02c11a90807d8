//! `mqh estimate`: correlation functions of an event stream and Yule-Walker checks
//! against a specification.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mqhawkes::estimate::{
    estimate_correlations_with, yw_residual_three_point, yw_residual_two_point, EstimateOptions, ThreePoint,
    YwResidualReport, DEFAULT_SEGMENTS,
};
use mqhawkes::model::ModelSpec;
use mqhawkes::simulate::EventStream;
use serde::{Deserialize, Serialize};

use crate::output::{emit, json, line, Outputs};
use crate::{Format, InvalidInput};

/// Largest residual score, in standard errors, still counted as consistent.
pub const SCORE_THRESHOLD: f64 = 4.0;
pub const CORRELATION_DIR: &str = "correlations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Check {
    #[value(name = "2pt")]
    #[serde(rename = "2pt")]
    TwoPoint,
    #[value(name = "3pt-diag")]
    #[serde(rename = "3pt-diag")]
    ThreePointDiag,
    #[value(name = "3pt-cross")]
    #[serde(rename = "3pt-cross")]
    ThreePointCross,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::TwoPoint => "2pt",
            Check::ThreePointDiag => "3pt-diag",
            Check::ThreePointCross => "3pt-cross",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    /// Event file (`.csv`, or `.bin` for the binary format).
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    /// TOML specification whose Yule-Walker equations are checked.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    /// Bin width.
    #[arg(long, value_name = "DT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Number of lags.
    #[arg(long, value_name = "Q")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Residual checks to run; repeatable [default: 2pt when --spec is given].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub check: Vec<Check>,
    /// Batch-means segments [default: 20].
    #[arg(long, value_name = "K")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub events: PathBuf,
    #[serde(default)]
    pub spec: Option<PathBuf>,
    pub dt: f64,
    pub q: usize,
    #[serde(default)]
    pub check: Vec<Check>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Verdict {
    check: &'static str,
    cells: usize,
    score: f64,
    threshold: f64,
    consistent: bool,
    file: String,
}

#[derive(Debug, Serialize)]
struct Summary {
    counts: Vec<usize>,
    lambda: Vec<f64>,
    span: f64,
    verdicts: Vec<Verdict>,
}

pub fn read_events(path: &Path) -> Result<EventStream> {
    let stream = if path.extension().is_some_and(|e| e == "bin") {
        EventStream::read_binary(path)
    } else {
        EventStream::read_csv(path)
    };
    stream.with_context(|| format!("event file {}", path.display()))
}

fn residuals(check: Check, corr: &mqhawkes::estimate::CorrelationSet, spec: &ModelSpec) -> Result<YwResidualReport> {
    let report = match check {
        Check::TwoPoint => yw_residual_two_point(corr, spec),
        Check::ThreePointDiag => yw_residual_three_point(corr, spec, ThreePoint::Diag),
        Check::ThreePointCross => yw_residual_three_point(corr, spec, ThreePoint::Cross),
    };
    report.with_context(|| format!("{} check", check.name()))
}

pub fn run(cfg: &Config, format: Format) -> Result<()> {
    let stream = read_events(&cfg.events)?;
    let spec = match &cfg.spec {
        Some(p) => Some(ModelSpec::load(p).with_context(|| format!("specification {}", p.display()))?),
        None => None,
    };
    let checks = match (&spec, cfg.check.is_empty()) {
        (None, false) => return Err(InvalidInput("--check needs --spec".into()).into()),
        (None, true) => Vec::new(),
        (Some(_), true) => vec![Check::TwoPoint],
        (Some(_), false) => cfg.check.clone(),
    };
    if let Some(s) = &spec {
        if s.digest() != stream.spec_digest && !stream.spec_digest.is_empty() {
            eprintln!("note: the events were simulated from a different specification");
        }
    }
    let options = EstimateOptions { dt: cfg.dt, q: cfg.q, segments: cfg.segments };
    let corr = estimate_correlations_with(&stream, options).context("estimation failed")?;

    let mut out = Outputs::create(&cfg.out, "estimate", cfg, Some(stream.seed))?;
    out.input(&cfg.events)?;
    if let Some(p) = &cfg.spec {
        out.input(p)?;
    }
    let bundle = out.dir().join(CORRELATION_DIR);
    corr.write_bundle(&bundle)?;
    let mut names: Vec<String> = std::fs::read_dir(&bundle)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    names.sort();
    for n in names {
        out.record(&format!("{CORRELATION_DIR}/{n}"))?;
    }

    let mut verdicts = Vec::new();
    if let Some(spec) = &spec {
        for check in checks {
            let report = residuals(check, &corr, spec)?;
            let file = format!("residuals_{}.csv", check.name());
            out.write(&file, &report.to_csv())?;
            verdicts.push(Verdict {
                check: check.name(),
                cells: report.cells.len(),
                score: report.score,
                threshold: SCORE_THRESHOLD,
                consistent: report.score < SCORE_THRESHOLD,
                file,
            });
        }
    }
    out.finish()?;

    let summary = Summary { counts: corr.counts.clone(), lambda: corr.lambda().to_vec(), span: corr.span, verdicts };
    let mut o = String::new();
    match format {
        Format::Json => o.push_str(&json(&summary)?),
        Format::Text => {
            o.push_str(&line("span", summary.span));
            o.push_str(&line("counts", format!("{:?}", summary.counts)));
            o.push_str(&line("lambda", format!("{:?}", summary.lambda)));
            for v in &summary.verdicts {
                writeln!(
                    o,
                    "verdict check={} cells={} score={:.6} threshold={} consistent={}",
                    v.check, v.cells, v.score, v.threshold, v.consistent
                )?;
            }
        }
    }
    emit(&o)?;
    Ok(())
}
