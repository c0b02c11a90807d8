//! Sample paths: exact event simulation by thinning and Euler-Maruyama paths of the
//! trend-feature diffusion.

mod features;
mod io;
mod sde;
mod thinning;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{intensity_at, FeatureState};
pub use io::{sidecar_path, StreamMeta};
pub use sde::{simulate_sde, SdeOptions, SdePath, SdeRun, SdeSummary};
pub use thinning::SimOptions;

use crate::model::{ModelError, ModelSpec};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("intensity reached {intensity:.3e} at t = {t}")]
    Exploded { t: f64, intensity: f64 },
    #[error("event budget of {count} reached at t = {t}")]
    TooManyEvents { t: f64, count: usize },
    #[error("invalid specification: {0}")]
    Model(#[from] ModelError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("query at {t} precedes the feature state at {t_last}")]
    TimeReversal { t: f64, t_last: f64 },
    #[error("intensity clamped at zero on {fraction:.2e} of steps")]
    StepSizeTooLarge { fraction: f64 },
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed event file: {0}")]
    Format(String),
}

/// One price jump. A co-jump produces two records with the same time, one per asset,
/// both flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub asset: u8,
    pub sign: i8,
    pub cojump: bool,
}

/// Time-ordered marked events on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub n_assets: usize,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub seed: u64,
    pub spec_digest: String,
}

impl EventStream {
    /// Number of distinct jump times (a co-jump counts once).
    pub fn jump_count(&self) -> usize {
        self.events.iter().filter(|e| !e.cojump || e.asset == 0).count()
    }

    pub fn cojump_count(&self) -> usize {
        self.events.iter().filter(|e| e.cojump && e.asset == 0).count()
    }

    /// Jump count of each asset.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_assets];
        for e in &self.events {
            c[e.asset as usize] += 1;
        }
        c
    }

    /// Same stream with times multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.horizon *= factor;
        for e in &mut s.events {
            e.t *= factor;
        }
        s
    }

    /// Same stream with asset labels permuted: asset `a` becomes `perm[a]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut s = self.clone();
        for e in &mut s.events {
            e.asset = perm[e.asset as usize] as u8;
        }
        // Keep co-jump pairs ordered by asset.
        for w in (0..s.events.len().saturating_sub(1)).rev() {
            let (a, b) = (s.events[w], s.events[w + 1]);
            if a.cojump && b.cojump && a.t == b.t && a.asset > b.asset {
                s.events.swap(w, w + 1);
            }
        }
        s
    }
}

/// Simulates `spec` on `[0, horizon]` with the default explosion cap.
pub fn simulate_events(spec: &ModelSpec, horizon: f64, seed: u64) -> Result<EventStream, SimError> {
    simulate_events_with(spec, horizon, seed, SimOptions::for_spec(spec))
}

pub fn simulate_events_with(
    spec: &ModelSpec,
    horizon: f64,
    seed: u64,
    options: SimOptions,
) -> Result<EventStream, SimError> {
    spec.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(SimError::InvalidInput(format!("horizon {horizon} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    thinning::run(spec, horizon, &mut rng, options, |e| events.push(e))?;
    Ok(EventStream { n_assets: spec.n_assets, events, horizon, seed, spec_digest: spec.digest() })
}

/// Independent runs over several seeds, in parallel; results are in seed order.
pub fn simulate_batch(spec: &ModelSpec, horizon: f64, seeds: &[u64]) -> Vec<Result<EventStream, SimError>> {
    seeds.par_iter().map(|&s| simulate_events(spec, horizon, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelEntry, KernelFunction};

    #[test]
    fn poisson_counts() {
        let spec = ModelSpec::poisson(vec![1.0, 0.0]);
        let s = simulate_events(&spec, 1e4, 7).unwrap();
        let n = s.events.len() as f64;
        assert!((n - 1e4).abs() < 300.0, "{n}");
        assert!(s.events.iter().all(|e| e.asset == 0 && e.sign.abs() == 1 && !e.cojump));
        assert!(s.events.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn reproducible() {
        let mut spec = ModelSpec::poisson(vec![0.5]);
        spec.zumbach.push(KernelEntry { target: 0, source: 0, kernel: KernelFunction::exponential(0.6, 1.0) });
        let a = simulate_events(&spec, 500.0, 3).unwrap();
        let b = simulate_events(&spec, 500.0, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate_events(&spec, 500.0, 4).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn explosive_spec_is_stopped() {
        let mut spec = ModelSpec::poisson(vec![1.0]);
        spec.hawkes.push(KernelEntry { target: 0, source: 0, kernel: KernelFunction::exponential(1.5 * 2.0, 2.0) });
        let opts = SimOptions { explosion_cap: 1e4, max_events: usize::MAX };
        let r = simulate_events_with(&spec, 1e6, 1, opts);
        assert!(matches!(r, Err(SimError::Exploded { .. })), "{r:?}");
    }

    #[test]
    fn tabulated_engine_matches_mean_rate() {
        // Activity kernel with integral 0.5 on a grid.
        let values: Vec<f64> = (0..=20).map(|k| 0.5 * (1.0 - k as f64 / 20.0)).collect();
        let mut spec = ModelSpec::poisson(vec![1.0]);
        spec.hawkes.push(KernelEntry { target: 0, source: 0, kernel: KernelFunction::tabulated(0.1, values) });
        let s = simulate_events(&spec, 2e4, 11).unwrap();
        let rate = s.events.len() as f64 / 2e4;
        assert!((rate - 2.0).abs() < 0.1, "{rate}");
    }
}
