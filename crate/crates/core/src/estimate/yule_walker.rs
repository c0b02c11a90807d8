//! Residuals of the Yule-Walker equations on the estimation grid.
//!
//! For lags `m ≥ 1` the martingale property gives, per target asset `i`,
//! `cov(n_i(b+m), n_j(b)) = E[∫_{bin b+m} (λ_i - λ̄_i) dt · n_j(b)]`, and the same with a
//! product of two past signed bins. Expanding every feedback term of the intensity and
//! treating covariance densities as uniform within a bin expresses the right-hand side
//! through the binned moments and the kernel weights `Φ`, `Ψ`:
//!
//! * activity `∫φ dN^l`: `Σ_{m'} Φ_φ(m') C*_lj(m - m')`;
//! * sign activity `∫κ ε⁰ε¹ dN^c`: the same with the co-mark covariance;
//! * leverage `∫L dP^l`: `Σ_{m' ≥ m} Φ_L(m') ℒ_jl(m' - m)`;
//! * trend `(∫f dP^a)(∫g dP^c)`: a same-event part with `Φ_{fg}` (activity of `a` when
//!   `a = c`, co-marks otherwise) and a distinct-event part
//!   `dt Σ_{n1,n2 ≥ m} Ψ(n1,n2) D_jac(n1 - m, n2 - m)`.
//!
//! The three-point identity for `m1 > m2 ≥ 1` follows in the same way; besides the
//! activity-like terms, trend factors pair with the later signed bin. Residuals are
//! evaluated segment by segment and summarized by their batch-means error.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::weights::{check_kernel, pair_weights, triangle_weights};
use super::{CorrelationSet, EstimateError, Moments};
use crate::model::{Feedback, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    TwoPoint,
    ThreePointDiag,
    ThreePointCross,
    TwoPointCojump,
}

/// Which block of the three-point function to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThreePoint {
    /// `D_ijj`: both signed bins on the same asset.
    Diag,
    /// `D_ijk` with `j ≠ k`.
    Cross,
}

/// Residual (right-hand side minus left-hand side) of one equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCell {
    /// `(m, 0)` for two-point cells, `(m1, m2)` for three-point cells.
    pub lags: (usize, usize),
    /// `[i, j]` or `[i, j, k]`.
    pub assets: Vec<usize>,
    pub lhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

impl ResidualCell {
    pub fn t_stat(&self) -> f64 {
        if self.stderr > 0.0 {
            self.residual.abs() / self.stderr
        } else if self.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YwResidualReport {
    pub equation: Equation,
    pub dt: f64,
    pub cells: Vec<ResidualCell>,
    /// Three-point cells at `m1 = m2`, where the raw third moment is compared with the
    /// two-point right-hand side. They carry an `O(dt)` bias and stay out of the score.
    pub diagonal: Vec<ResidualCell>,
    /// `max |residual| / stderr` over `cells`.
    pub score: f64,
}

impl YwResidualReport {
    fn new(equation: Equation, dt: f64, cells: Vec<ResidualCell>, diagonal: Vec<ResidualCell>) -> Self {
        let score = cells.iter().map(ResidualCell::t_stat).fold(0.0, f64::max);
        Self { equation, dt, cells, diagonal, score }
    }

    /// One machine-readable line.
    pub fn verdict(&self) -> String {
        format!("equation={:?} cells={} score={:.6}", self.equation, self.cells.len(), self.score)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m1,m2,tau1,tau2,i,j,k,lhs,residual,stderr\n");
        for c in self.cells.iter().chain(&self.diagonal) {
            let k = c.assets.get(2).map_or(String::new(), |k| k.to_string());
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e}\n",
                c.lags.0,
                c.lags.1,
                c.lags.0 as f64 * self.dt,
                c.lags.1 as f64 * self.dt,
                c.assets[0],
                c.assets[1],
                k,
                c.lhs,
                c.residual,
                c.stderr
            ));
        }
        s
    }
}

/// One feedback term of one target asset with its grid weights.
#[derive(Debug, Clone)]
enum Term {
    Activity { source: usize, phi: Vec<f64> },
    Leverage { source: usize, phi: Vec<f64> },
    SignActivity { phi: Vec<f64> },
    Trend { first: usize, second: usize, same: Vec<f64>, pair: Vec<f64> },
}

struct Weights {
    dt: f64,
    q: usize,
    /// Stride of the pair tables.
    stride: usize,
    /// Terms acting on each asset's jump rate.
    targets: Vec<Vec<Term>>,
}

impl Weights {
    fn new(spec: &ModelSpec, corr: &CorrelationSet) -> Result<Self, EstimateError> {
        spec.validate()?;
        if spec.n_assets != corr.n_assets {
            return Err(EstimateError::InvalidInput(format!(
                "specification has {} assets, correlations {}",
                spec.n_assets, corr.n_assets
            )));
        }
        let (dt, q) = (corr.dt, corr.q);
        let stride = 2 * q + 2;
        let mut targets = vec![Vec::new(); spec.n_assets];
        for p in spec.processes() {
            let mut terms = Vec::new();
            for f in &p.feedback {
                for k in f.kernels() {
                    check_kernel(k, dt, q)?;
                }
                terms.push(match f {
                    Feedback::Activity { source, kernel } => {
                        Term::Activity { source: *source, phi: triangle_weights(&[kernel], dt, q + 1) }
                    }
                    Feedback::Leverage { source, kernel } => {
                        Term::Leverage { source: *source, phi: triangle_weights(&[kernel], dt, q + 1) }
                    }
                    Feedback::SignActivity { kernel } => {
                        Term::SignActivity { phi: triangle_weights(&[kernel], dt, q + 1) }
                    }
                    Feedback::Trend { first, second } => Term::Trend {
                        first: first.0,
                        second: second.0,
                        same: triangle_weights(&[&first.1, &second.1], dt, q + 1),
                        pair: pair_weights(&first.1, &second.1, dt, stride),
                    },
                });
            }
            for &a in &p.assets {
                targets[a].extend(terms.iter().cloned());
            }
        }
        Ok(Self { dt, q, stride, targets })
    }

    /// Right-hand side of the two-point equation for `C_ij(m)`, `m ≥ 1`.
    fn two_point(&self, mo: &Moments, m: usize, i: usize, j: usize) -> f64 {
        let q = self.q;
        let lag = |mp: usize| m as isize - mp as isize;
        let mut acc = 0.0;
        for term in &self.targets[i] {
            acc += match term {
                Term::Activity { source, phi } => (0..=q).map(|mp| phi[mp] * mo.c(lag(mp), *source, j)).sum(),
                Term::SignActivity { phi } => (0..=q).map(|mp| phi[mp] * mo.comark(lag(mp), j)).sum(),
                Term::Leverage { source, phi } => (m..=q).map(|mp| phi[mp] * mo.leverage(mp - m, j, *source)).sum(),
                Term::Trend { first, second, same, pair } => {
                    let same_event: f64 = if first == second {
                        (0..=q).map(|mp| same[mp] * mo.c(lag(mp), *first, j)).sum()
                    } else {
                        (0..=q).map(|mp| same[mp] * mo.comark(lag(mp), j)).sum()
                    };
                    let mut distinct = 0.0;
                    for k1 in 0..=q {
                        let row = &pair[(m + k1) * self.stride + m..];
                        for k2 in 0..=q {
                            distinct += row[k2] * mo.d(j, *first, *second, k1, k2);
                        }
                    }
                    same_event + self.dt * distinct
                }
            };
        }
        acc
    }

    /// Right-hand side of the three-point equation for `D_ijk(m1, m2)`, `m1 > m2 ≥ 1`.
    fn three_point(&self, mo: &Moments, m1: usize, m2: usize, i: usize, j: usize, k: usize) -> f64 {
        let q = self.q;
        let dt = self.dt;
        let gap = m1 - m2;
        // Trend factor paired with the later signed bin, the other on a bin n back.
        let paired = |c: usize, n: usize| {
            let mut v = mo.d(k, j, c, gap, n - m2);
            if c == j && n == m1 {
                v += (mo.c(gap as isize, k, j) + mo.lambda[k] * mo.lambda[j]) / dt;
            }
            v
        };
        let mut acc = 0.0;
        for term in &self.targets[i] {
            acc += match term {
                Term::Activity { source, phi } => {
                    (0..=m2).map(|mp| phi[mp] * mo.d(*source, j, k, m1 - mp, m2 - mp)).sum()
                }
                Term::Leverage { source, phi } => {
                    if *source == k {
                        phi[m2] * mo.leverage(gap, k, j) / dt
                    } else {
                        0.0
                    }
                }
                Term::SignActivity { .. } => 0.0,
                Term::Trend { first, second, same, pair } => {
                    let mut v = 0.0;
                    if first == second {
                        v += (0..=m2).map(|mp| same[mp] * mo.d(*first, j, k, m1 - mp, m2 - mp)).sum::<f64>();
                    }
                    let s = self.stride;
                    if *first == k {
                        v += (m2..=m2 + q).map(|n| pair[m2 * s + n] * paired(*second, n)).sum::<f64>();
                    }
                    if *second == k {
                        v += (m2..=m2 + q).map(|n| pair[n * s + m2] * paired(*first, n)).sum::<f64>();
                    }
                    v
                }
            };
        }
        acc
    }
}

/// Mean and standard error over segments of per-segment values.
fn summarize(values: &[f64]) -> (f64, f64) {
    let s = values.len() as f64;
    let mean = values.iter().sum::<f64>() / s;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0).max(1.0);
    (mean, (var / s).sqrt())
}

fn cell(
    corr: &CorrelationSet,
    lags: (usize, usize),
    assets: Vec<usize>,
    lhs: impl Fn(&Moments) -> f64,
    rhs: impl Fn(&Moments) -> f64,
) -> ResidualCell {
    let per: Vec<f64> = corr.segments.iter().map(|mo| rhs(mo) - lhs(mo)).collect();
    let (residual, stderr) = summarize(&per);
    ResidualCell { lags, assets, lhs: lhs(&corr.mean), residual, stderr }
}

/// Two-point residuals `RHS - C_ij(m)` for `m = 1..=q`.
pub fn yw_residual_two_point(corr: &CorrelationSet, spec: &ModelSpec) -> Result<YwResidualReport, EstimateError> {
    let w = Weights::new(spec, corr)?;
    let n = corr.n_assets;
    let mut cells = Vec::new();
    for m in 1..=corr.q {
        for i in 0..n {
            for j in 0..n {
                cells.push(cell(corr, (m, 0), vec![i, j], |mo| mo.c(m as isize, i, j), |mo| w.two_point(mo, m, i, j)));
            }
        }
    }
    let eq = if spec.cojump.is_some() { Equation::TwoPointCojump } else { Equation::TwoPoint };
    Ok(YwResidualReport::new(eq, corr.dt, cells, Vec::new()))
}

/// Three-point residuals on the triangle `m1 > m2 ≥ 1`. The diagonal block also
/// reports the `m1 = m2` cells in `diagonal`.
pub fn yw_residual_three_point(
    corr: &CorrelationSet,
    spec: &ModelSpec,
    which: ThreePoint,
) -> Result<YwResidualReport, EstimateError> {
    if spec.cojump.is_some() || corr.cojumps > 0 {
        return Err(EstimateError::InvalidInput("three-point equations assume no co-jumps".into()));
    }
    let w = Weights::new(spec, corr)?;
    let n = corr.n_assets;
    let q = corr.q;
    let mut cells = Vec::new();
    let mut diagonal = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let keep = match which {
                    ThreePoint::Diag => j == k,
                    ThreePoint::Cross => j != k,
                };
                if !keep {
                    continue;
                }
                for m1 in 1..=q {
                    if which == ThreePoint::Diag {
                        diagonal.push(cell(
                            corr,
                            (m1, m1),
                            vec![i, j, k],
                            |mo| mo.d_diagonal(m1, i, j),
                            |mo| w.two_point(mo, m1, i, j),
                        ));
                    }
                    for m2 in 1..m1 {
                        cells.push(cell(
                            corr,
                            (m1, m2),
                            vec![i, j, k],
                            |mo| mo.d(i, j, k, m1, m2),
                            |mo| w.three_point(mo, m1, m2, i, j, k),
                        ));
                    }
                }
            }
        }
    }
    let eq = match which {
        ThreePoint::Diag => Equation::ThreePointDiag,
        ThreePoint::Cross => Equation::ThreePointCross,
    };
    Ok(YwResidualReport::new(eq, corr.dt, cells, diagonal))
}

/// Activity kernels recovered from the two-point function alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityKernels {
    pub dt: f64,
    /// `values[i][l][m]`: kernel from `l` to `i` at lag `m·dt`, `m = 0..=q`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Trapezoid integrals of the recovered kernels.
    pub integrals: Vec<Vec<f64>>,
}

impl ActivityKernels {
    pub fn value(&self, i: usize, l: usize, m: usize) -> f64 {
        self.values[i][l][m]
    }
}

/// Triangle weights `Φ(0..=q)` of a piecewise-linear kernel as a linear map of its node
/// values `f_1..f_q`, with `f_0 = 2f_1 - f_2` and `f_{q+1} = 0`. A free `f_0` would admit
/// the spurious exact solution `Φ = δ_0` of the two-point system.
fn node_map(q: usize, dt: f64) -> DMatrix<f64> {
    // Columns 0..q-1 hold f_1..f_q; node(k) is the coefficient row of f_k.
    let node = |k: usize| -> DVector<f64> {
        let mut v = DVector::zeros(q);
        match k {
            0 => {
                v[0] = 2.0;
                if q > 1 {
                    v[1] = -1.0;
                }
            }
            k if k <= q => v[k - 1] = 1.0,
            _ => {}
        }
        v
    };
    let mut t = DMatrix::zeros(q + 1, q);
    for m in 0..=q {
        let row = if m == 0 {
            (node(0) * 2.0 + node(1)) * (dt / 6.0)
        } else {
            (node(m - 1) + node(m) * 4.0 + node(m + 1)) * (dt / 6.0)
        };
        t.set_row(m, &row.transpose());
    }
    t
}

/// Solves the square two-point system of a pure activity model for piecewise-linear
/// kernels: `q·N` node values per target against the equations for `m = 1..=q`.
pub fn recover_activity_kernels(corr: &CorrelationSet) -> Result<ActivityKernels, EstimateError> {
    let n = corr.n_assets;
    let q = corr.q;
    let dt = corr.dt;
    let mo = &corr.mean;
    if q < 2 {
        return Err(EstimateError::InvalidInput("kernel recovery needs at least two lags".into()));
    }
    let t = node_map(q, dt);
    let size = n * q;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for j in 0..n {
        for l in 0..n {
            let lagged = DMatrix::from_fn(q, q + 1, |r, mp| mo.c(r as isize + 1 - mp as isize, l, j));
            a.view_mut((j * q, l * q), (q, q)).copy_from(&(lagged * &t));
        }
    }
    let lu = a.lu();
    let mut values = vec![vec![Vec::new(); n]; n];
    for (i, w) in values.iter_mut().enumerate() {
        let b = DVector::from_fn(size, |row, _| mo.c((row % q + 1) as isize, i, row / q));
        let x = lu.solve(&b).ok_or_else(|| EstimateError::InvalidInput("singular two-point system".into()))?;
        for l in 0..n {
            let f: Vec<f64> = (0..q).map(|p| x[l * q + p]).collect();
            let f0 = 2.0 * f[0] - f[1];
            w[l] = std::iter::once(f0).chain(f).collect();
        }
    }
    let integrals =
        values.iter().map(|r| r.iter().map(|f| dt * (f.iter().sum::<f64>() - 0.5 * f[0])).collect()).collect();
    Ok(ActivityKernels { dt, values, integrals })
}
