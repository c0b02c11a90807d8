//! Asymptotic and exact expressions for the symmetric angular equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{theta_grid, TailError};

fn check_nz(n_z: f64) -> Result<(), TailError> {
    if n_z > 0.0 && n_z.is_finite() {
        Ok(())
    } else {
        Err(TailError::InvalidInput(format!("n_Z = {n_z} must be positive")))
    }
}

fn check_gamma(gamma: f64) -> Result<(), TailError> {
    if gamma.abs() < 2.0 {
        Ok(())
    } else {
        Err(TailError::InvalidInput(format!("|gamma| = {} must be < 2", gamma.abs())))
    }
}

/// Isotropic exponent `2 + 1/n_Z`.
pub fn alpha0(n_z: f64) -> f64 {
    2.0 + 1.0 / n_z
}

/// `α0 + (γ²/32)(4/n_Z - 1/n_Z³)`.
pub fn alpha_small_gamma(n_z: f64, gamma: f64) -> Result<f64, TailError> {
    check_nz(n_z)?;
    Ok(alpha0(n_z) + gamma * gamma / 32.0 * (4.0 / n_z - 1.0 / n_z.powi(3)))
}

/// First-order expansion around `n_Z = 1/2`: `4 + 16/(4+γ²)(1/2 - n_Z)`.
pub fn alpha_near_half(n_z: f64, gamma: f64) -> Result<f64, TailError> {
    check_nz(n_z)?;
    Ok(4.0 + 16.0 / (4.0 + gamma * gamma) * (0.5 - n_z))
}

/// `C/(2 + γ sin 2θ)` on `θ_k = kπ/m`, with `∫_0^{2π} = 1`, i.e. `C = √(4-γ²)/(2π)`.
pub fn f_infinity(gamma: f64, m: usize) -> Result<Vec<f64>, TailError> {
    check_gamma(gamma)?;
    let c = (4.0 - gamma * gamma).sqrt() / (2.0 * PI);
    Ok(theta_grid(m).into_iter().map(|t| c / (2.0 + gamma * (2.0 * t).sin())).collect())
}

/// `ζ = (1 - γ²/4)^{-1/2}`, so that `α ≈ 2 + ζ/n_Z` for large `n_Z`.
pub fn zeta_large_nz(gamma: f64) -> Result<f64, TailError> {
    check_gamma(gamma)?;
    Ok((1.0 - gamma * gamma / 4.0).powf(-0.5))
}

/// First correction `G` in `F = F_∞ + G/n_Z² + …`, on `θ_k = kπ/m`.
///
/// Solves `[(2 + γ sin2θ) G]'' = -C (2ζ(ζ-1) + γζ² sin2θ)/(2 + γ sin2θ)` with `C` the
/// normalization of [`f_infinity`]. `G` is fixed by periodicity up to a multiple of
/// `1/(2 + γ sin2θ)`; that freedom is removed by `∫_0^π G = 0`.
pub fn g_correction(gamma: f64, m: usize) -> Result<Vec<f64>, TailError> {
    check_gamma(gamma)?;
    if m < 8 {
        return Err(TailError::InvalidInput("grid too small".into()));
    }
    let zeta = zeta_large_nz(gamma)?;
    let c = (4.0 - gamma * gamma).sqrt() / (2.0 * PI);
    // Fine grid for the double integration; sampled back onto `m` points.
    let refine = 16;
    let n = m * refine;
    let h = PI / n as f64;
    let a = |t: f64| 2.0 + gamma * (2.0 * t).sin();
    let rhs = |t: f64| -c * (2.0 * zeta * (zeta - 1.0) + gamma * zeta * zeta * (2.0 * t).sin()) / a(t);
    // H' = ∫ rhs, H = ∫ H'; both by the trapezoid rule on [0, π].
    let mut d1 = vec![0.0; n + 1];
    for k in 0..n {
        let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
        d1[k + 1] = d1[k] + 0.5 * h * (rhs(t0) + rhs(t1));
    }
    let mut h0 = vec![0.0; n + 1];
    for k in 0..n {
        h0[k + 1] = h0[k] + 0.5 * h * (d1[k] + d1[k + 1]);
    }
    // Add a linear term so that H is periodic.
    let slope = -h0[n] / PI;
    let hh: Vec<f64> = (0..n).map(|k| h0[k] + slope * k as f64 * h).collect();
    let g: Vec<f64> = (0..n).map(|k| hh[k] / a(k as f64 * h)).collect();
    let inv: Vec<f64> = (0..n).map(|k| 1.0 / a(k as f64 * h)).collect();
    let shift = g.iter().sum::<f64>() / inv.iter().sum::<f64>();
    Ok((0..m).map(|k| g[k * refine] - shift * inv[k * refine]).collect())
}

/// Harmonic-oscillator approximation for small `n_Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallNz {
    pub zeta: f64,
    pub alpha: f64,
    /// Gaussian width of the angular profile, in radians.
    pub psi_width: f64,
    /// Location of the profile maximum: `π/4` for `γ > 0`, `-π/4` for `γ < 0`.
    pub peak: f64,
}

/// `ζ = 2/(2+|γ|) + √(2|γ|/(2+|γ|)) n_Z`, `α = 2 + ζ/n_Z`, with the ground-state width
/// `√n_Z (2ϰ)^{-1/2}`, `ϰ = ζ√(|γ|/(4+2|γ|))`.
pub fn alpha_small_nz(n_z: f64, gamma: f64) -> Result<SmallNz, TailError> {
    check_nz(n_z)?;
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Err(TailError::InvalidInput("small-n_Z expansion needs gamma != 0".into()));
    }
    let g = gamma.abs();
    let zeta = 2.0 / (2.0 + g) + (2.0 * g / (2.0 + g)).sqrt() * n_z;
    let kappa = zeta * (g / (4.0 + 2.0 * g)).sqrt();
    Ok(SmallNz {
        zeta,
        alpha: 2.0 + zeta / n_z,
        psi_width: n_z.sqrt() / (2.0 * kappa).sqrt(),
        peak: gamma.signum() * PI / 4.0,
    })
}

/// Perturbative threshold `1 + γ²/8` on `n_Z` for a finite mean activity.
pub fn n_star_estimate(gamma: f64) -> f64 {
    1.0 + gamma * gamma / 8.0
}
