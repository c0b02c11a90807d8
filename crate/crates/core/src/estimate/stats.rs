//! Tail-index and goodness-of-fit statistics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::EstimateError;

/// Hill estimate of the tail exponent `μ` of `P(X > x) ~ x^{-μ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub mu: f64,
    pub stderr: f64,
    /// Order statistics used.
    pub k: usize,
}

/// Hill estimator on the `k = k_frac·len` largest samples: `μ = k / Σ_{i<k} ln(x_(i)/x_(k))`.
pub fn hill_tail_index(samples: &[f64], k_frac: f64) -> Result<HillEstimate, EstimateError> {
    if samples.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(EstimateError::InvalidInput("samples must be positive and finite".into()));
    }
    if !(k_frac > 0.0 && k_frac < 1.0) {
        return Err(EstimateError::InvalidInput(format!("k_frac {k_frac} outside (0, 1)")));
    }
    let k = (k_frac * samples.len() as f64).floor() as usize;
    if k < 50 {
        return Err(EstimateError::InvalidInput(format!("{k} order statistics, at least 50 needed")));
    }
    let mut sorted = samples.to_vec();
    let (top, threshold, _) = sorted.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    Ok(hill_from_top(top, *threshold))
}

fn hill_from_top(top: &[f64], threshold: f64) -> HillEstimate {
    let k = top.len();
    let lt = threshold.ln();
    let s: f64 = top.iter().map(|x| x.ln() - lt).sum();
    let mu = k as f64 / s;
    HillEstimate { mu, stderr: mu / (k as f64).sqrt(), k }
}

/// Min-heap key ordered by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

/// Streaming Hill estimator: keeps the `k + 1` largest samples seen, so paths too long
/// to store can be analyzed in one pass.
#[derive(Debug, Clone)]
pub struct TopOrderStatistics {
    k: usize,
    heap: BinaryHeap<Key>,
}

impl TopOrderStatistics {
    /// Retains enough values for a Hill estimate on the `k` largest samples.
    pub fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 2) }
    }

    pub fn push(&mut self, x: f64) {
        if self.heap.len() <= self.k {
            self.heap.push(Key(x));
        } else if self.heap.peek().is_some_and(|m| x > m.0) {
            self.heap.pop();
            self.heap.push(Key(x));
        }
    }

    /// Hill estimate with threshold at the `(k+1)`-th largest sample.
    pub fn hill(&self) -> Result<HillEstimate, EstimateError> {
        if self.k < 50 || self.heap.len() <= self.k {
            return Err(EstimateError::InvalidInput(format!(
                "{} order statistics retained, at least 51 needed",
                self.heap.len()
            )));
        }
        let threshold = self.heap.peek().expect("heap is not empty").0;
        if !(threshold > 0.0) {
            return Err(EstimateError::InvalidInput("samples must be positive".into()));
        }
        let top: Vec<f64> = self.heap.iter().map(|k| k.0).filter(|x| *x != threshold).collect();
        let ties = self.k - top.len();
        let mut all = top;
        all.extend(std::iter::repeat_n(threshold, ties));
        Ok(hill_from_top(&all, threshold))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of binned counts against expected counts; bins with expectation below
/// five are merged into their right neighbor.
pub fn chi_square_test(observed: &[f64], expected: &[f64], fitted: usize) -> Result<ChiSquare, EstimateError> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(EstimateError::InvalidInput("observed and expected lengths differ".into()));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= 5.0 {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    let dof = merged.len().saturating_sub(1 + fitted);
    if dof == 0 {
        return Err(EstimateError::InvalidInput("no degrees of freedom left".into()));
    }
    let statistic: f64 = merged.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new(dof as f64).map_err(|e| EstimateError::InvalidInput(e.to_string()))?;
    Ok(ChiSquare { statistic, dof, p_value: 1.0 - dist.cdf(statistic) })
}
