//! Periodic finite-difference discretization of the angular equation.
//!
//! The equation is `P2(θ) F'' + P1(θ) F' + P0(θ; α) F = 0` on the π-periodic circle.
//! The symmetric shortcut uses `[(1 + γcs)F]'' + [(α-2)(α-α0) + (α-2)²γcs] F = 0`
//! with `cs = cosθ sinθ`, expanded by the product rule.

use std::f64::consts::PI;

use super::{TailError, TailProblem};

/// Cyclic tridiagonal matrix: row `k` couples `k-1`, `k`, `k+1` modulo `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| self.lower[k] * x[(k + n - 1) % n] + self.diag[k] * x[k] + self.upper[k] * x[(k + 1) % n])
            .collect()
    }

    /// Dense copy, for small-size spectral checks.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] += self.diag[k];
            m[(k, (k + n - 1) % n)] += self.lower[k];
            m[(k, (k + 1) % n)] += self.upper[k];
        }
        m
    }

    /// LU factors of `shift·I - A` without pivoting, or `None` when a pivot is not
    /// strictly positive.
    ///
    /// For `A` with positive off-diagonals, `shift·I - A` is a Z-matrix; all pivots are
    /// positive exactly when it is a nonsingular M-matrix, i.e. when the Perron root of
    /// `A` lies below `shift`.
    pub fn shifted_factor(&self, shift: f64) -> Option<Factor> {
        let n = self.len();
        assert!(n >= 3, "cyclic factorization needs at least three rows");
        let sub: Vec<f64> = self.lower.iter().map(|v| -v).collect();
        let sup: Vec<f64> = self.upper.iter().map(|v| -v).collect();
        let mut d: Vec<f64> = self.diag.iter().map(|v| shift - v).collect();
        let last = n - 1;
        // Fill-in: `col[k]` is entry (k, last), `row[k]` entry (last, k).
        let mut col = vec![0.0; n];
        let mut row = vec![0.0; n];
        let mut lmul = vec![0.0; n];
        let mut rmul = vec![0.0; n];
        col[0] = sub[0];
        row[0] = sup[last];
        for k in 0..n - 2 {
            let p = d[k];
            if !(p > 0.0) {
                return None;
            }
            let right = if k + 1 == last { 0.0 } else { sup[k] };
            lmul[k] = sub[k + 1] / p;
            d[k + 1] -= lmul[k] * right;
            col[k + 1] = -lmul[k] * col[k];
            rmul[k] = row[k] / p;
            row[k + 1] = -rmul[k] * right;
            d[last] -= rmul[k] * col[k];
        }
        let k = n - 2;
        col[k] += sup[k];
        row[k] += sub[last];
        let p = d[k];
        if !(p > 0.0) {
            return None;
        }
        rmul[k] = row[k] / p;
        d[last] -= rmul[k] * col[k];
        if !(d[last] > 0.0) {
            return None;
        }
        Some(Factor { d, sup, col, lmul, rmul })
    }
}

/// Elimination record of a cyclic tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Factor {
    d: Vec<f64>,
    sup: Vec<f64>,
    col: Vec<f64>,
    lmul: Vec<f64>,
    rmul: Vec<f64>,
}

impl Factor {
    /// Solves the factored system.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let last = n - 1;
        let mut y = rhs.to_vec();
        for k in 0..n - 1 {
            if k + 1 < last {
                y[k + 1] -= self.lmul[k] * y[k];
            }
            y[last] -= self.rmul[k] * y[k];
        }
        let mut x = vec![0.0; n];
        x[last] = y[last] / self.d[last];
        x[last - 1] = (y[last - 1] - self.col[last - 1] * x[last]) / self.d[last - 1];
        for k in (0..last - 1).rev() {
            x[k] = (y[k] - self.sup[k] * x[k + 1] - self.col[k] * x[last]) / self.d[k];
        }
        x
    }
}

/// Uniform grid `θ_k = kπ/m`.
pub fn theta_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| k as f64 * PI / m as f64).collect()
}

/// Coefficients `(P2, P1, P0)` of the angular equation at `θ`.
pub fn coefficients(problem: &TailProblem, alpha: f64, theta: f64) -> (f64, f64, f64) {
    match problem.symmetric {
        Some(s) => symmetric_coefficients(s.n_z, s.gamma, alpha, theta),
        None => general_coefficients(problem, alpha, theta),
    }
}

fn symmetric_coefficients(n_z: f64, gamma: f64, alpha: f64, theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let cs = c * s;
    let a = 1.0 + gamma * cs;
    let da = gamma * c2;
    let dda = -2.0 * gamma * s2;
    let alpha0 = 2.0 + 1.0 / n_z;
    let potential = (alpha - 2.0) * (alpha - alpha0) + (alpha - 2.0).powi(2) * gamma * cs;
    (a, 2.0 * da, dda + potential)
}

fn general_coefficients(p: &TailProblem, alpha: f64, theta: f64) -> (f64, f64, f64) {
    let [w1, w2] = p.omega;
    let (a11, a12) = (p.a_z[0][0], p.a_z[0][1]);
    let (a21, a22) = (p.a_z[1][0], p.a_z[1][1]);
    let [x1, x2] = p.a_cross;
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let al = alpha;
    let s1 = a11 * a11 + a12 * a12 + (a11 * a11 - a12 * a12) * c2 + x1 * s2;
    let sv2 = a21 * a21 + a22 * a22 + (a21 * a21 - a22 * a22) * c2 + x2 * s2;
    let (q1, q2) = ((a11 * w1).powi(2), (a22 * w2).powi(2));
    let (v1, v2) = (w1 * w1, w2 * w2);
    let p0 = w1 + w2 + q1 + q2
        - al * (w1 + 2.0 * q1) * c * c
        - al * (w2 + 2.0 * q2) * s * s
        - (x2 * v2 + x1 * v1) * al * c * s
        + 0.125 * al * (al + (2.0 + al) * c2) * v1 * s1
        + 0.125 * al * (al - (2.0 + al) * c2) * v2 * sv2;
    let p1 = x2 * v2 * c * c - x1 * v1 * s * s - c * s * (w1 - w2 + 2.0 * q1 - 2.0 * q2)
        + 0.25 * (1.0 + al) * v1 * s2 * s1
        - 0.25 * (1.0 + al) * v2 * s2 * sv2;
    let p2 = 0.25 * (v1 * s * s * s1 + v2 * c * c * sv2);
    (p2, p1, p0)
}

/// Second-order central-difference operator on `m` points over `[0, π)`.
pub fn assemble_ode(problem: &TailProblem, alpha: f64, m: usize) -> Result<CyclicTridiagonal, TailError> {
    if m < 64 || !m.is_multiple_of(2) {
        return Err(TailError::InvalidInput(format!("grid size {m} must be even and >= 64")));
    }
    if !alpha.is_finite() {
        return Err(TailError::InvalidInput("alpha must be finite".into()));
    }
    let h = PI / m as f64;
    let mut op =
        CyclicTridiagonal { lower: Vec::with_capacity(m), diag: Vec::with_capacity(m), upper: Vec::with_capacity(m) };
    for theta in theta_grid(m) {
        let (p2, p1, p0) = coefficients(problem, alpha, theta);
        let lo = p2 / (h * h) - p1 / (2.0 * h);
        let up = p2 / (h * h) + p1 / (2.0 * h);
        if !(p2 > 0.0) || !(lo > 0.0) || !(up > 0.0) {
            return Err(TailError::DegenerateOperator { theta });
        }
        op.lower.push(lo);
        op.diag.push(-2.0 * p2 / (h * h) + p0);
        op.upper.push(up);
    }
    Ok(op)
}
