//! Power-law tail of the stationary trend-feature distribution when activity feedback
//! is absent.
//!
//! For large `r` the density behaves as `F(θ) r^{-α}` with `z = r(cosθ, sinθ)`. The
//! exponent is the smallest `α > 2` for which the angular equation has a positive
//! π-periodic solution.

mod closed_form;
mod empirical;
mod operator;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use closed_form::{
    alpha0, alpha_near_half, alpha_small_gamma, alpha_small_nz, f_infinity, g_correction, n_star_estimate,
    zeta_large_nz, SmallNz,
};
pub use empirical::{profile_bin_mass, sample_sde, AngularHistogram, SamplingConfig, SdeSample};
pub use operator::{assemble_ode, coefficients, theta_grid, CyclicTridiagonal, Factor};

use crate::model::FeatureModel;

#[derive(Debug, Error, PartialEq)]
pub enum TailError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("second-order coefficient vanishes near theta = {theta}")]
    DegenerateOperator { theta: f64 },
    #[error("no admissible alpha in [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
}

/// Symmetric parametrization: `a^i_Z,j = √(2n_Z/ω)`, `a^i_× = 2γn_Z/ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricShortcut {
    pub n_z: f64,
    pub gamma: f64,
}

/// Coefficients of the bivariate trend-feature diffusion
/// `dz_i = -ω_i z_i dt + ω_i √λ_i dW_i`, `λ_i = λ_i∞ + Σ_j (a_z[i][j] z_j)² + a_cross[i] z_0 z_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProblem {
    pub omega: [f64; 2],
    pub a_z: [[f64; 2]; 2],
    pub a_cross: [f64; 2],
    pub baseline: [f64; 2],
    /// When set, the angular equation uses the simplified symmetric form.
    #[serde(default)]
    pub symmetric: Option<SymmetricShortcut>,
}

impl TailProblem {
    pub fn symmetric(n_z: f64, gamma: f64, omega: f64, baseline: f64) -> Result<Self, TailError> {
        if !(n_z > 0.0) || !n_z.is_finite() {
            return Err(TailError::InvalidInput(format!("n_Z = {n_z} must be positive")));
        }
        if !(gamma.abs() < 2.0) {
            return Err(TailError::InvalidInput(format!("|gamma| = {} must be < 2", gamma.abs())));
        }
        let a = (2.0 * n_z / omega).sqrt();
        let x = 2.0 * gamma * n_z / omega;
        let p = Self {
            omega: [omega; 2],
            a_z: [[a; 2]; 2],
            a_cross: [x; 2],
            baseline: [baseline; 2],
            symmetric: Some(SymmetricShortcut { n_z, gamma }),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TailError> {
        let bad = |m: String| Err(TailError::InvalidInput(m));
        if self.omega.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return bad("omega must be positive".into());
        }
        if self.baseline.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return bad("baselines must be nonnegative".into());
        }
        let finite = self.a_z.iter().flatten().chain(&self.a_cross).all(|v| v.is_finite());
        if !finite {
            return bad("non-finite amplitude".into());
        }
        for i in 0..2 {
            let lhs = 4.0 * (self.a_z[i][0] * self.a_z[i][1]).powi(2);
            if lhs < self.a_cross[i].powi(2) * (1.0 - 1e-12) {
                return bad(format!("intensity {i} can become negative: 4(a_1 a_2)^2 < a_x^2"));
            }
        }
        if let Some(s) = self.symmetric {
            if self.omega[0] != self.omega[1] {
                return bad("symmetric shortcut requires equal omegas".into());
            }
            if !(s.gamma.abs() < 2.0) || !(s.n_z > 0.0) {
                return bad("symmetric shortcut needs n_Z > 0 and |gamma| < 2".into());
            }
        }
        Ok(())
    }

    /// Trend part of a feature model (activity weights are ignored).
    pub fn from_features(fm: &FeatureModel) -> Result<Self, TailError> {
        fm.validate().map_err(|e| TailError::InvalidInput(e.to_string()))?;
        if fm.n_assets() != 2 {
            return Err(TailError::InvalidInput("tail problem needs two assets".into()));
        }
        let cross = if fm.a_cross.is_empty() { [0.0; 2] } else { [fm.a_cross[0], fm.a_cross[1]] };
        let p = Self {
            omega: [fm.omega[0], fm.omega[1]],
            a_z: [[fm.a_z[0][0], fm.a_z[0][1]], [fm.a_z[1][0], fm.a_z[1][1]]],
            a_cross: cross,
            baseline: [fm.baseline[0], fm.baseline[1]],
            symmetric: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Intensities at a trend state.
    pub fn intensity(&self, z: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.baseline[i]
                + (self.a_z[i][0] * z[0]).powi(2)
                + (self.a_z[i][1] * z[1]).powi(2)
                + self.a_cross[i] * z[0] * z[1];
        }
        out
    }

    /// Default search interval.
    fn default_bracket(&self) -> (f64, f64) {
        let hi = match self.symmetric {
            Some(s) => alpha0(s.n_z) + 4.0,
            None => 64.0,
        };
        (2.0 + 1e-6, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSolution {
    /// Richardson-extrapolated exponent from grids `M` and `2M`.
    pub alpha: f64,
    /// Exponent on the requested grid.
    pub alpha_grid: f64,
    /// `|α(M) - α(2M)|`.
    pub grid_change: f64,
    /// `θ_k = kπ/M`.
    pub theta: Vec<f64>,
    /// Positive periodic profile with `∫_0^{2π} F = 1`.
    pub f: Vec<f64>,
    /// Perron root of the discrete operator at `alpha_grid`.
    pub eigen_residual: f64,
    /// `max |A F| / max |diag A|` at `alpha_grid`.
    pub residual: f64,
    pub m: usize,
    pub warnings: Vec<String>,
}

impl TailSolution {
    /// Tail exponent of the one-dimensional marginals.
    pub fn marginal_exponent(&self) -> f64 {
        self.alpha - 2.0
    }

    /// `theta,F` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,F\n");
        for (t, f) in self.theta.iter().zip(&self.f) {
            s.push_str(&format!("{t:.16e},{f:.16e}\n"));
        }
        s
    }
}

/// Sign of the Perron root of the operator at `alpha`: `false` when negative.
fn perron_nonnegative(problem: &TailProblem, alpha: f64, m: usize) -> Result<bool, TailError> {
    let op = assemble_ode(problem, alpha, m)?;
    Ok(op.shifted_factor(0.0).is_none())
}

/// Leftmost `α` in `[lo, hi]` at which the Perron root crosses zero from below.
fn find_alpha(problem: &TailProblem, m: usize, lo: f64, hi: f64) -> Result<f64, TailError> {
    const SCAN: usize = 400;
    let step = (hi - lo) / SCAN as f64;
    let mut prev: Option<(f64, bool)> = None;
    for k in 0..=SCAN {
        let a = lo + step * k as f64;
        let pos = perron_nonnegative(problem, a, m)?;
        if let Some((pa, false)) = prev {
            if pos {
                return bisect(problem, m, pa, a);
            }
        }
        prev = Some((a, pos));
    }
    Err(TailError::NotBracketed { lo, hi })
}

fn bisect(problem: &TailProblem, m: usize, mut a: f64, mut b: f64) -> Result<f64, TailError> {
    while b - a > 1e-13 * b {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if perron_nonnegative(problem, mid, m)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Perron vector and root by shifted inverse iteration.
fn perron_vector(op: &CyclicTridiagonal) -> (Vec<f64>, f64) {
    let n = op.len();
    let scale = op.diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut shift = 1e-9 * scale;
    let factor = loop {
        if let Some(f) = op.shifted_factor(shift) {
            break f;
        }
        shift *= 2.0;
    };
    let mut x = vec![1.0; n];
    for _ in 0..200 {
        let y = factor.solve(&x);
        let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let next: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let delta = next.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = next;
        if delta < 1e-14 {
            break;
        }
    }
    let ax = op.apply(&x);
    let num: f64 = ax.iter().zip(&x).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    (x, num / den)
}

fn solve_on_grid(problem: &TailProblem, m: usize, lo: f64, hi: f64) -> Result<f64, TailError> {
    match problem.symmetric {
        // Expand the interval when the scan comes up empty for a general problem.
        None => {
            let mut top = hi;
            loop {
                match find_alpha(problem, m, lo, top) {
                    Err(TailError::NotBracketed { .. }) if top < 1e4 => top = 2.0 + 4.0 * (top - 2.0),
                    other => return other,
                }
            }
        }
        Some(_) => find_alpha(problem, m, lo, hi),
    }
}

/// Smallest admissible exponent and its angular profile.
pub fn solve_alpha(problem: &TailProblem, m: usize, bracket: Option<(f64, f64)>) -> Result<TailSolution, TailError> {
    problem.validate()?;
    let (lo, hi) = bracket.unwrap_or_else(|| problem.default_bracket());
    if !(lo > 2.0) || !(hi > lo) {
        return Err(TailError::InvalidInput(format!("bracket ({lo}, {hi}) must satisfy 2 < lo < hi")));
    }
    let alpha_grid = solve_on_grid(problem, m, lo, hi)?;
    let alpha_fine = solve_on_grid(problem, 2 * m, lo, hi)?;
    let grid_change = (alpha_grid - alpha_fine).abs();
    let alpha = alpha_fine + (alpha_fine - alpha_grid) / 3.0;
    let op = assemble_ode(problem, alpha_grid, m)?;
    let (x, root) = perron_vector(&op);
    let h = PI / m as f64;
    let total: f64 = 2.0 * h * x.iter().sum::<f64>();
    let f: Vec<f64> = x.iter().map(|v| v / total).collect();
    let ax = op.apply(&f);
    let scale = op.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(*v));
    let residual = ax.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (scale * fmax);
    let mut warnings = Vec::new();
    if grid_change > 1e-6 {
        warnings.push(format!("alpha changes by {grid_change:.3e} when doubling the grid"));
    }
    if f.iter().any(|v| *v < 0.0) {
        warnings.push("angular profile changes sign".into());
    }
    Ok(TailSolution {
        alpha,
        alpha_grid,
        grid_change,
        theta: theta_grid(m),
        f,
        eigen_residual: root,
        residual,
        m,
        warnings,
    })
}
