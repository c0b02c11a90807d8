//! Bin-level quadrature weights of the kernels on the estimation grid.
//!
//! A bin-level covariance stands for the covariance density averaged over a pair of
//! bins, so a kernel acting between a bin `m` steps back and the current bin enters
//! through its triangle average
//! `Φ(m) = ∫_{-dt}^{dt} f(m·dt + x) (1 - |x|/dt) dx`.
//! Products of two kernels acting on distinct past events enter through
//! `Ψ(n1, n2) = ∫_0^dt F_f(n1, t) F_g(n2, t) dt` with
//! `F_f(n, t) = dt⁻¹ ∫_{t+(n-1)dt}^{t+n·dt} f`.

use super::EstimateError;
use crate::model::KernelFunction;
use crate::quad::GaussLegendre;

/// Largest tolerated kernel mass beyond the last lag, relative to the total.
pub const SUPPORT_TOLERANCE: f64 = 0.01;

/// Checks that `kernel` is representable on a grid of `q` lags of width `dt`.
pub fn check_kernel(kernel: &KernelFunction, dt: f64, q: usize) -> Result<(), EstimateError> {
    if let KernelFunction::Tabulated { step, .. } = kernel {
        let ratio = dt / step;
        let aligned = |r: f64| r >= 1.0 - 1e-9 && (r - r.round()).abs() < 1e-6 * r;
        if !aligned(ratio) && !aligned(1.0 / ratio) {
            return Err(EstimateError::GridMismatch { dt, step: *step });
        }
    }
    let total = kernel.abs_tail_mass(0.0);
    if total == 0.0 {
        return Ok(());
    }
    let left = kernel.abs_tail_mass(q as f64 * dt) / total;
    if !(left < SUPPORT_TOLERANCE) {
        return Err(EstimateError::SupportNotCovered { fraction: left, span: q as f64 * dt });
    }
    Ok(())
}

/// Sub-panels per bin so that tabulated kernels are linear on every panel.
fn panels(kernels: &[&KernelFunction], dt: f64) -> usize {
    kernels
        .iter()
        .filter_map(|k| match k {
            KernelFunction::Tabulated { step, .. } => Some((dt / step).round().max(1.0) as usize),
            _ => None,
        })
        .max()
        .unwrap_or(1)
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let rule = GaussLegendre::sixteen();
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|k| rule.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, f)).sum()
}

/// Triangle weights `Φ(0..=len-1)` of `f` (a product of the given kernels).
pub fn triangle_weights(kernels: &[&KernelFunction], dt: f64, len: usize) -> Vec<f64> {
    let f = |s: f64| kernels.iter().map(|k| k.value(s)).product::<f64>();
    let pieces = panels(kernels, dt);
    (0..len)
        .map(|m| {
            let c = m as f64 * dt;
            let rise = |s: f64| f(s) * (1.0 - (c - s) / dt);
            let fall = |s: f64| f(s) * (1.0 - (s - c) / dt);
            let left = if m == 0 { 0.0 } else { integrate(&rise, c - dt, c, pieces) };
            left + integrate(&fall, c, c + dt, pieces)
        })
        .collect()
}

/// Pair weights `Ψ(n1, n2)` for `1 ≤ n1, n2 < len`, row-major with stride `len`
/// (row and column 0 are zero).
pub fn pair_weights(f: &KernelFunction, g: &KernelFunction, dt: f64, len: usize) -> Vec<f64> {
    let rule = GaussLegendre::new(8);
    let nodes: Vec<(f64, f64)> = rule.mapped(0.0, dt).collect();
    let table = |k: &KernelFunction| -> Vec<Vec<f64>> {
        (0..len)
            .map(|n| {
                nodes
                    .iter()
                    .map(|(t, _)| {
                        if n == 0 {
                            0.0
                        } else {
                            let a = t + (n as f64 - 1.0) * dt;
                            k.integral_between(a, a + dt) / dt
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let tf = table(f);
    let tg = if f == g { tf.clone() } else { table(g) };
    let mut out = vec![0.0; len * len];
    for n1 in 1..len {
        for n2 in 1..len {
            out[n1 * len + n2] = nodes.iter().enumerate().map(|(r, (_, w))| w * tf[n1][r] * tg[n2][r]).sum();
        }
    }
    out
}
