//! Sufficient conditions for nonnegative intensities on a truncated lag grid.
//!
//! On the grid `s_m = m·dt`, `m = 1..=q`, the intensity of a process is
//! `λ∞ + Lᵀr + rᵀ𝕂r` with `r` the stacked binned returns of all assets. It stays
//! nonnegative for every `r` when `𝕂` is PSD (no leverage), or when `𝕂` is PD and
//! `λ∞ ≥ ¼ Lᵀ𝕂⁻¹L`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Feedback, ModelSpec, Process};

/// Relative slack on the smallest eigenvalue.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessVerdict {
    pub ok: bool,
    pub min_eigenvalue: f64,
    /// `¼Lᵀ𝕂⁻¹L - λ∞` when leverage is present and `𝕂` is definite.
    pub leverage_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub ok: bool,
    /// Worst violation over processes, in intensity units; `≤ 0` means a margin.
    /// Without leverage it is `-λ_min(𝕂)`, with leverage `¼Lᵀ𝕂⁻¹L - λ∞`
    /// (infinite when `𝕂` is not definite).
    pub deficit: f64,
    /// Largest `∫_{q·dt}^∞ |f|` over the kernels involved.
    pub truncated_mass: f64,
    /// Largest truncated mass relative to the kernel's total absolute mass.
    pub truncated_fraction: f64,
    pub processes: Vec<ProcessVerdict>,
}

/// Quadratic form `𝕂` and linear form `L` of one process on the lag grid.
pub(crate) fn discretize(process: &Process, n_assets: usize, q: usize, dt: f64) -> (DMatrix<f64>, DVector<f64>) {
    let dim = n_assets * q;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let mut l = DVector::<f64>::zeros(dim);
    let lag = |m: usize| (m + 1) as f64 * dt;
    for f in &process.feedback {
        match f {
            Feedback::Activity { source, kernel } => {
                for m in 0..q {
                    k[(source * q + m, source * q + m)] += kernel.value(lag(m));
                }
            }
            Feedback::Leverage { source, kernel } => {
                for m in 0..q {
                    l[source * q + m] += kernel.value(lag(m));
                }
            }
            Feedback::Trend { first, second } => {
                let (a, b) = (first.0, second.0);
                for m in 0..q {
                    let fm = first.1.value(lag(m));
                    for n in 0..q {
                        let gn = second.1.value(lag(n));
                        let v = 0.5 * fm * gn;
                        k[(a * q + m, b * q + n)] += v;
                        k[(b * q + n, a * q + m)] += v;
                    }
                }
            }
            Feedback::SignActivity { kernel } => {
                for m in 0..q {
                    let v = 0.5 * kernel.value(lag(m));
                    k[(m, q + m)] += v;
                    k[(q + m, m)] += v;
                }
            }
        }
    }
    (k, l)
}

/// Checks every process of `spec` on the grid `m·dt`, `m = 1..=q`.
pub fn check_positivity(spec: &ModelSpec, q: usize, dt: f64) -> PositivityReport {
    let q = q.max(1);
    let n = spec.n_assets;
    let mut verdicts = Vec::new();
    let mut deficit = f64::NEG_INFINITY;
    let mut truncated_mass = 0.0f64;
    let mut truncated_fraction = 0.0f64;
    for p in spec.processes() {
        for kernel in p.feedback.iter().flat_map(Feedback::kernels) {
            let tail = kernel.abs_tail_mass(q as f64 * dt);
            let total = kernel.abs_tail_mass(0.0);
            truncated_mass = truncated_mass.max(tail);
            if total > 0.0 {
                truncated_fraction = truncated_fraction.max(tail / total);
            }
        }
        let (k, l) = discretize(&p, n, q, dt);
        let scale = k.norm();
        let tol = PSD_TOLERANCE * scale;
        let eig = SymmetricEigen::new(k.clone());
        let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let has_leverage = l.iter().any(|v| *v != 0.0);
        let verdict = if !has_leverage {
            let ok = min_eigenvalue >= -tol;
            deficit = deficit.max(-min_eigenvalue);
            ProcessVerdict { ok, min_eigenvalue, leverage_excess: None }
        } else if min_eigenvalue <= tol {
            deficit = f64::INFINITY;
            ProcessVerdict { ok: false, min_eigenvalue, leverage_excess: None }
        } else {
            let chol = k.cholesky().expect("definite matrix factorizes");
            let x = chol.solve(&l);
            let excess = 0.25 * l.dot(&x) - p.baseline;
            deficit = deficit.max(excess);
            ProcessVerdict { ok: excess <= 0.0, min_eigenvalue, leverage_excess: Some(excess) }
        };
        verdicts.push(verdict);
    }
    PositivityReport {
        ok: verdicts.iter().all(|v| v.ok),
        deficit,
        truncated_mass,
        truncated_fraction,
        processes: verdicts,
    }
}
