//! Angular histogram and tail index of simulated trend paths, for comparison with the
//! solved angular profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::TailProblem;
use crate::estimate::{chi_square_test, ChiSquare, EstimateError, HillEstimate, TopOrderStatistics};
use crate::simulate::{SdeOptions, SdeRun, SdeSummary, SimError};

/// Sampling rules applied while the path is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Histogram bins on `[0, π)`.
    pub bins: usize,
    /// Steps between two angular samples.
    pub stride: u64,
    /// Angular samples are kept only for `|z| ≥ radius_cut`.
    pub radius_cut: f64,
    /// Fraction of post-burn-in steps used as Hill order statistics on `|z_1|`.
    pub hill_fraction: f64,
    /// Initial steps ignored by both statistics.
    pub burn_in: u64,
}

impl SamplingConfig {
    /// One angular sample per angular relaxation time and a radius where the quadratic
    /// part of every intensity exceeds `100×` its baseline.
    pub fn for_problem(problem: &TailProblem, dt: f64, steps: u64) -> Self {
        let omega = problem.omega[0].max(problem.omega[1]);
        let mut rate = omega;
        for i in 0..2 {
            let a2 = problem.a_z[i][0].powi(2).max(problem.a_z[i][1].powi(2));
            rate = rate.max(0.5 * problem.omega[i].powi(2) * a2);
        }
        let stride = (1.0 / (rate * dt)).ceil().max(1.0) as u64;
        let qmin = min_quadratic_weight(problem);
        let base = problem.baseline[0].max(problem.baseline[1]);
        let radius_cut = if qmin > 0.0 { (100.0 * base / qmin).sqrt() } else { 0.0 };
        let relax = (10.0 / (omega.min(problem.omega[0].min(problem.omega[1])) * dt)).ceil() as u64;
        Self { bins: 32, stride, radius_cut, hill_fraction: 1e-3, burn_in: relax.min(steps / 10) }
    }
}

/// `min_θ min_i (λ_i(cosθ, sinθ) - λ_i∞)`.
fn min_quadratic_weight(problem: &TailProblem) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..720 {
        let t = PI * k as f64 / 720.0;
        let l = problem.intensity([t.cos(), t.sin()]);
        for i in 0..2 {
            m = m.min(l[i] - problem.baseline[i]);
        }
    }
    m
}

/// Counts of `θ = atan2(z_2, z_1) mod π` on equal bins of `[0, π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl AngularHistogram {
    pub fn new(bins: usize) -> Self {
        let edges = (0..=bins).map(|k| PI * k as f64 / bins as f64).collect();
        Self { edges, counts: vec![0; bins] }
    }

    pub fn add(&mut self, z: [f64; 2]) {
        let theta = z[1].atan2(z[0]).rem_euclid(PI);
        let bins = self.counts.len();
        let b = ((theta / PI * bins as f64) as usize).min(bins - 1);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Normalized density on `[0, π)`.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        let width = PI / self.counts.len() as f64;
        self.counts.iter().map(|c| *c as f64 / (total * width)).collect()
    }
}

/// Probability of each bin under a π-periodic profile sampled on `θ_k = kπ/M`
/// (linear interpolation, normalized to one on `[0, π)`).
pub fn profile_bin_mass(f: &[f64], edges: &[f64]) -> Vec<f64> {
    let m = f.len();
    let h = PI / m as f64;
    let at = |t: f64| {
        let x = t / h;
        let k = x.floor();
        let w = x - k;
        let k = k as usize;
        (1.0 - w) * f[k % m] + w * f[(k + 1) % m]
    };
    const SUB: usize = 64;
    let mass: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let step = (e[1] - e[0]) / SUB as f64;
            let mut s = 0.5 * (at(e[0]) + at(e[1]));
            for j in 1..SUB {
                s += at(e[0] + step * j as f64);
            }
            s * step
        })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.into_iter().map(|v| v / total).collect()
}

/// Statistics gathered along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeSample {
    pub config: SamplingConfig,
    pub summary: SdeSummary,
    pub histogram: AngularHistogram,
    /// Hill estimate of the tail exponent of `|z_1|`, when enough samples exist.
    pub hill: Option<HillEstimate>,
    /// Post-burn-in time averages of `z_1²` and `z_2²`.
    pub mean_square: [f64; 2],
}

impl SdeSample {
    /// Pearson test of the histogram against a profile on `θ_k = kπ/M`.
    pub fn chi_square(&self, f: &[f64]) -> Result<ChiSquare, EstimateError> {
        let total = self.histogram.total() as f64;
        let expected: Vec<f64> = profile_bin_mass(f, &self.histogram.edges).into_iter().map(|p| p * total).collect();
        let observed: Vec<f64> = self.histogram.counts.iter().map(|c| *c as f64).collect();
        chi_square_test(&observed, &expected, 0)
    }
}

/// Integrates the path once, filling the histogram and the Hill order statistics.
pub fn sample_sde(problem: &TailProblem, options: SdeOptions, config: SamplingConfig) -> Result<SdeSample, SimError> {
    if config.bins == 0 || config.stride == 0 || !(config.hill_fraction > 0.0 && config.hill_fraction < 1.0) {
        return Err(SimError::InvalidInput("bins, stride and Hill fraction must be positive".into()));
    }
    let run = SdeRun::new(problem, options)?;
    let kept = options.steps.saturating_sub(config.burn_in);
    let k = (config.hill_fraction * kept as f64).floor() as usize;
    let mut top = TopOrderStatistics::new(k);
    let mut histogram = AngularHistogram::new(config.bins);
    let cut2 = config.radius_cut * config.radius_cut;
    let mut square = [0.0; 2];
    let summary = run.run(|step, z, _| {
        if step <= config.burn_in {
            return;
        }
        square[0] += z[0] * z[0];
        square[1] += z[1] * z[1];
        top.push(z[0].abs());
        if step % config.stride == 0 && z[0] * z[0] + z[1] * z[1] >= cut2 {
            histogram.add(z);
        }
    })?;
    let n = kept.max(1) as f64;
    let mean_square = [square[0] / n, square[1] / n];
    Ok(SdeSample { config, summary, histogram, hill: top.hill().ok(), mean_square })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_mass_of_flat_profile_is_uniform() {
        let h = AngularHistogram::new(8);
        let mass = profile_bin_mass(&vec![0.3; 64], &h.edges);
        for p in mass {
            assert!((p - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn angles_fold_onto_half_period() {
        let mut h = AngularHistogram::new(4);
        h.add([1.0, 0.1]);
        h.add([-1.0, -0.1]);
        h.add([-1.0, 0.1]);
        assert_eq!(h.counts, vec![2, 0, 0, 1]);
        let d = h.density();
        let width = PI / 4.0;
        assert!((d.iter().sum::<f64>() * width - 1.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_ou_histogram_is_flat() {
        let p =
            TailProblem { omega: [1.0; 2], a_z: [[0.0; 2]; 2], a_cross: [0.0; 2], baseline: [1.0; 2], symmetric: None };
        let options = SdeOptions::new(0.01, 400_000, 4);
        let config = SamplingConfig::for_problem(&p, 0.01, options.steps);
        assert_eq!(config.radius_cut, 0.0);
        let s = sample_sde(&p, options, config).unwrap();
        let chi = s.chi_square(&[1.0; 16]).unwrap();
        assert!(chi.p_value > 1e-3, "{chi:?}");
        // Stationary variance ωλ∞/2.
        for v in s.mean_square {
            assert!((v / 0.5 - 1.0).abs() < 0.1, "{v}");
        }
    }
}
