//! Event-stream persistence: CSV `t,asset,sign,cojump`, a compact binary frame and a
//! JSON sidecar with the seed and specification digest.
//!
//! Binary layout (little endian): magic `MQHEVT01`, `u8` asset count, `f64` horizon,
//! `u64` seed, `u64` event count, then per event `f64` time, `u8` asset, `i8` sign,
//! `u8` co-jump flag. The spec digest lives in the sidecar only.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Event, EventStream, SimError};

const MAGIC: &[u8; 8] = b"MQHEVT01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub n_assets: usize,
    pub horizon: f64,
    pub seed: u64,
    pub spec_digest: String,
    pub events: usize,
}

/// `events.csv` → `events.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn io_err(e: std::io::Error) -> SimError {
    SimError::Io(e.to_string())
}

impl EventStream {
    pub fn meta(&self) -> StreamMeta {
        StreamMeta {
            n_assets: self.n_assets,
            horizon: self.horizon,
            seed: self.seed,
            spec_digest: self.spec_digest.clone(),
            events: self.events.len(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(32 * self.events.len() + 32);
        s.push_str("t,asset,sign,cojump\n");
        for e in &self.events {
            s.push_str(&format!("{:.16e},{},{},{}\n", e.t, e.asset, e.sign, e.cojump as u8));
        }
        s
    }

    fn write_sidecar(&self, path: &Path) -> Result<(), SimError> {
        let text = serde_json::to_string_pretty(&self.meta()).map_err(|e| SimError::Io(e.to_string()))?;
        fs::write(sidecar_path(path), text).map_err(io_err)
    }

    fn read_sidecar(path: &Path) -> Result<Option<StreamMeta>, SimError> {
        let side = sidecar_path(path);
        if !side.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(side).map_err(io_err)?;
        serde_json::from_str(&text).map(Some).map_err(|e| SimError::Format(e.to_string()))
    }

    /// Writes the CSV file and its sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<(), SimError> {
        let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
        w.write_all(self.to_csv_string().as_bytes()).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.write_sidecar(path)
    }

    /// Reads a CSV stream. Without a sidecar the horizon is the last event time and the
    /// asset count is one more than the largest asset index.
    pub fn read_csv(path: &Path) -> Result<Self, SimError> {
        let file = fs::File::open(path).map_err(io_err)?;
        let mut events = Vec::new();
        for (k, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err)?;
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with('t')) {
                continue;
            }
            events.push(parse_row(line).ok_or_else(|| SimError::Format(format!("line {}: {line}", k + 1)))?);
        }
        Self::assemble(events, Self::read_sidecar(path)?)
    }

    pub fn write_binary(&self, path: &Path) -> Result<(), SimError> {
        let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
        let mut put = |b: &[u8]| w.write_all(b).map_err(io_err);
        put(MAGIC)?;
        put(&[self.n_assets as u8])?;
        put(&self.horizon.to_le_bytes())?;
        put(&self.seed.to_le_bytes())?;
        put(&(self.events.len() as u64).to_le_bytes())?;
        for e in &self.events {
            put(&e.t.to_le_bytes())?;
            put(&[e.asset, e.sign as u8, e.cojump as u8])?;
        }
        w.flush().map_err(io_err)?;
        self.write_sidecar(path)
    }

    pub fn read_binary(path: &Path) -> Result<Self, SimError> {
        let mut bytes = Vec::new();
        fs::File::open(path).map_err(io_err)?.read_to_end(&mut bytes).map_err(io_err)?;
        let bad = |m: &str| SimError::Format(m.to_string());
        if bytes.len() < 33 || &bytes[..8] != MAGIC {
            return Err(bad("missing binary header"));
        }
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let n_assets = bytes[8] as usize;
        let horizon = f64_at(9);
        let seed = u64_at(17);
        let count = u64_at(25) as usize;
        let body = &bytes[33..];
        if body.len() != count * 11 {
            return Err(bad("event count does not match file length"));
        }
        let events = body
            .chunks_exact(11)
            .map(|c| Event {
                t: f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                asset: c[8],
                sign: c[9] as i8,
                cojump: c[10] != 0,
            })
            .collect();
        let digest = Self::read_sidecar(path)?.map(|m| m.spec_digest).unwrap_or_default();
        let meta = StreamMeta { n_assets, horizon, seed, spec_digest: digest, events: count };
        Self::assemble(events, Some(meta))
    }

    fn assemble(events: Vec<Event>, meta: Option<StreamMeta>) -> Result<Self, SimError> {
        let inferred_n = events.iter().map(|e| e.asset as usize + 1).max().unwrap_or(1);
        let last = events.last().map_or(0.0, |e| e.t);
        let (n_assets, horizon, seed, spec_digest) = match meta {
            Some(m) => (m.n_assets, m.horizon, m.seed, m.spec_digest),
            None => (inferred_n, last, 0, String::new()),
        };
        let stream = EventStream { n_assets, events, horizon, seed, spec_digest };
        stream.check()?;
        Ok(stream)
    }

    /// Structural checks: ordering, marks and co-jump pairing.
    pub fn check(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Format(m));
        let mut prev = f64::NEG_INFINITY;
        let mut k = 0;
        while k < self.events.len() {
            let e = self.events[k];
            if !e.t.is_finite() || e.t < prev || e.t > self.horizon {
                return bad(format!("event {k} at t = {} out of order or beyond horizon", e.t));
            }
            if e.sign != 1 && e.sign != -1 {
                return bad(format!("event {k} has sign {}", e.sign));
            }
            if e.asset as usize >= self.n_assets {
                return bad(format!("event {k} has asset {}", e.asset));
            }
            if e.cojump {
                let pair = self.events.get(k + 1);
                match pair {
                    Some(p) if p.cojump && p.t == e.t && e.asset == 0 && p.asset == 1 => {}
                    _ => return bad(format!("co-jump record {k} is not followed by its partner")),
                }
                k += 2;
            } else {
                if e.t == prev {
                    return bad(format!("event {k} repeats time {}", e.t));
                }
                k += 1;
            }
            prev = e.t;
        }
        Ok(())
    }
}

fn parse_row(line: &str) -> Option<Event> {
    let mut it = line.split(',').map(str::trim);
    let t = it.next()?.parse().ok()?;
    let asset = it.next()?.parse().ok()?;
    let sign = it.next()?.parse().ok()?;
    let cojump = match it.next()? {
        "1" | "true" => true,
        "0" | "false" => false,
        _ => return None,
    };
    if it.next().is_some() {
        return None;
    }
    Some(Event { t, asset, sign, cojump })
}
