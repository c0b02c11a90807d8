//! Multivariate quadratic Hawkes model: parametrization, validation, endogeneity,
//! mean intensities and positivity conditions.
//!
//! The intensity of asset `i` is
//!
//! ```text
//! λ_i(t) = λ_i∞ + Σ_j ∫ L^i_j dP^j + Σ_j ∫ φ^i_jj dN^j + Σ_j (∫ k^i_jj dP^j)²
//!        + Σ_{j≠i} (∫ k^i_ji dP^i)(∫ k^i_ij dP^j)
//! ```
//!
//! With co-jumps (two assets only) a third counting process `N^c` moves both prices
//! at once; its own intensity has the same structure.

mod features;
mod kernel;
mod positivity;
mod structure;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use features::FeatureModel;
pub use kernel::{product_integral, KernelFunction};
pub use positivity::{check_positivity, PositivityReport, ProcessVerdict};
pub use structure::{Feedback, Process};

use crate::linalg::{spectral_radius, LinalgError};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("kernel integral diverges: {0}")]
    NonIntegrableKernel(String),
    #[error("model is not stationary: {0}")]
    NonStationary(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot parse specification: {0}")]
    Parse(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::InvalidInput(m) => ModelError::InvalidInput(m),
        }
    }
}

/// Kernel applied by `source`'s price or activity to `target`'s intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub target: usize,
    pub source: usize,
    pub kernel: KernelFunction,
}

/// Cross-trend term `(∫ own dP^target)(∫ partner dP^other)` in `target`'s intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossEntry {
    pub target: usize,
    pub other: usize,
    pub own: KernelFunction,
    pub partner: KernelFunction,
}

/// Kernel of the co-jump intensity driven by one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceKernel {
    pub source: usize,
    pub kernel: KernelFunction,
}

/// Cross-trend term of the co-jump intensity, `(∫ first dP^0)(∫ second dP^1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoCross {
    pub first: KernelFunction,
    pub second: KernelFunction,
}

/// Activity response of `process` to the co-jump sign product `ε⁰ε¹ dN^c`.
///
/// `process` is 0 or 1 for the idiosyncratic processes and 2 for the co-jump process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessKernel {
    pub process: usize,
    pub kernel: KernelFunction,
}

/// Co-jump block (bivariate models only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoJumpSpec {
    /// Baseline `μ_c∞` of the co-jump process.
    pub baseline: f64,
    /// Sign correlation `E[ε⁰ε¹]`.
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hawkes: Vec<SourceKernel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zumbach: Vec<SourceKernel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leverage: Vec<SourceKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<CoCross>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sign_activity: Vec<ProcessKernel>,
}

impl CoJumpSpec {
    pub fn constant(baseline: f64, rho: f64) -> Self {
        Self {
            baseline,
            rho,
            hawkes: Vec::new(),
            zumbach: Vec::new(),
            leverage: Vec::new(),
            cross: None,
            sign_activity: Vec::new(),
        }
    }
}

/// Full model specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_assets: usize,
    pub baseline: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leverage: Vec<KernelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hawkes: Vec<KernelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zumbach: Vec<KernelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zumbach_cross: Vec<CrossEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cojump: Option<CoJumpSpec>,
}

/// Stability class of a specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    StationaryFiniteMean,
    StationaryInfiniteMeanConjectured,
    Explosive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndogeneityReport {
    /// Spectral radius of the integrated activity kernels.
    pub n_h: f64,
    /// Spectral radius of the integrated time-diagonal kernels (activity plus trend).
    pub n_total: f64,
    /// `∫ (k^i_jj)²` per (target, source).
    pub n_z_matrix: Vec<Vec<f64>>,
    /// `∫ φ^i_jj` per (target, source).
    pub n_h_matrix: Vec<Vec<f64>>,
    pub classification: Classification,
}

/// Stationary mean rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanIntensity {
    /// Total jump rate of each asset (co-jumps included).
    pub assets: Vec<f64>,
    /// Rate of the co-jump process, when present.
    pub cojump: Option<f64>,
}

impl ModelSpec {
    /// Poisson model with the given baselines and no feedback.
    pub fn poisson(baseline: Vec<f64>) -> Self {
        Self {
            n_assets: baseline.len(),
            baseline,
            leverage: Vec::new(),
            hawkes: Vec::new(),
            zumbach: Vec::new(),
            zumbach_cross: Vec::new(),
            cojump: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_assets;
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if n == 0 || n > u8::MAX as usize {
            return bad(format!("n_assets must be in 1..=255, got {n}"));
        }
        if self.baseline.len() != n {
            return bad(format!("baseline has {} entries for {n} assets", self.baseline.len()));
        }
        if self.baseline.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return bad("baselines must be finite and nonnegative".into());
        }
        for (family, entries) in [("leverage", &self.leverage), ("hawkes", &self.hawkes), ("zumbach", &self.zumbach)] {
            let mut seen = Vec::new();
            for e in entries {
                if e.target >= n || e.source >= n {
                    return bad(format!("{family} entry ({}, {}) out of range", e.target, e.source));
                }
                if seen.contains(&(e.target, e.source)) {
                    return bad(format!("duplicate {family} entry ({}, {})", e.target, e.source));
                }
                seen.push((e.target, e.source));
                e.kernel.validate()?;
            }
        }
        let mut seen = Vec::new();
        for c in &self.zumbach_cross {
            if c.target >= n || c.other >= n || c.target == c.other {
                return bad(format!("cross entry ({}, {}) invalid", c.target, c.other));
            }
            if seen.contains(&(c.target, c.other)) {
                return bad(format!("duplicate cross entry ({}, {})", c.target, c.other));
            }
            seen.push((c.target, c.other));
            c.own.validate()?;
            c.partner.validate()?;
        }
        if let Some(cj) = &self.cojump {
            if n != 2 {
                return bad("co-jumps are supported for two assets only".into());
            }
            if !cj.baseline.is_finite() || cj.baseline < 0.0 {
                return bad("co-jump baseline must be finite and nonnegative".into());
            }
            if !(-1.0..=1.0).contains(&cj.rho) {
                return bad(format!("rho = {} outside [-1, 1]", cj.rho));
            }
            for (family, entries) in
                [("cojump.hawkes", &cj.hawkes), ("cojump.zumbach", &cj.zumbach), ("cojump.leverage", &cj.leverage)]
            {
                let mut seen = Vec::new();
                for e in entries {
                    if e.source >= n || seen.contains(&e.source) {
                        return bad(format!("{family} source {} invalid or duplicated", e.source));
                    }
                    seen.push(e.source);
                    e.kernel.validate()?;
                }
            }
            if let Some(c) = &cj.cross {
                c.first.validate()?;
                c.second.validate()?;
            }
            let mut seen = Vec::new();
            for e in &cj.sign_activity {
                if e.process > 2 || seen.contains(&e.process) {
                    return bad(format!("sign_activity process {} invalid", e.process));
                }
                seen.push(e.process);
                e.kernel.validate()?;
            }
        }
        Ok(())
    }

    /// Kernel lookup in a (target, source) family.
    pub fn entry(entries: &[KernelEntry], target: usize, source: usize) -> Option<&KernelFunction> {
        entries.iter().find(|e| e.target == target && e.source == source).map(|e| &e.kernel)
    }

    pub fn has_leverage(&self) -> bool {
        self.leverage.iter().any(|e| !e.kernel.is_zero())
            || self.cojump.as_ref().is_some_and(|c| c.leverage.iter().any(|e| !e.kernel.is_zero()))
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec = toml::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String, ModelError> {
        toml::to_string(self).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| ModelError::Io(e.to_string()))
    }

    /// Time-diagonal integrated kernels per (target asset, source asset):
    /// activity part `∫φ` and trend part `∫k²`, summed over every process moving the target.
    fn integrated_diagonal(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), ModelError> {
        let n = self.n_assets;
        let mut hawkes = DMatrix::zeros(n, n);
        let mut trend = DMatrix::zeros(n, n);
        for p in self.processes() {
            for f in &p.feedback {
                match f {
                    Feedback::Activity { source, kernel } => {
                        let v = kernel.integral()?;
                        for &i in &p.assets {
                            hawkes[(i, *source)] += v;
                        }
                    }
                    Feedback::Trend { first, second } if first.0 == second.0 => {
                        let v = product_integral(&first.1, &second.1)?;
                        for &i in &p.assets {
                            trend[(i, first.0)] += v;
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok((hawkes, trend))
    }
}

/// Endogeneity ratios and stability class.
///
/// With co-jumps, the effective kernel of asset `i` is the sum of its idiosyncratic
/// kernels and the co-jump kernels.
pub fn endogeneity(spec: &ModelSpec) -> Result<EndogeneityReport, ModelError> {
    spec.validate()?;
    let (hawkes, trend) = spec.integrated_diagonal()?;
    let n_h = spectral_radius(&hawkes)?;
    let n_total = spectral_radius(&(&hawkes + &trend))?;
    let classification = if n_h >= 1.0 {
        Classification::Explosive
    } else if n_total < 1.0 {
        Classification::StationaryFiniteMean
    } else {
        Classification::StationaryInfiniteMeanConjectured
    };
    Ok(EndogeneityReport {
        n_h,
        n_total,
        n_z_matrix: crate::linalg::to_rows(&trend),
        n_h_matrix: crate::linalg::to_rows(&hawkes),
        classification,
    })
}

/// Stationary mean intensities.
///
/// Every process rate `μ̄_p` satisfies `μ̄_p = μ_p∞ + Σ_j D^p_j λ̄_j + X^p ρ μ̄_c` where
/// `λ̄_j` sums the rates of processes moving asset `j`, `D^p_j` integrates the
/// time-diagonal kernels and `X^p` the cross kernels on the diagonal. The system is
/// linear in the process rates and solved directly.
pub fn mean_intensity(spec: &ModelSpec) -> Result<MeanIntensity, ModelError> {
    let report = endogeneity(spec)?;
    if report.classification != Classification::StationaryFiniteMean {
        return Err(ModelError::NonStationary(format!(
            "{:?} (n_H = {}, n_total = {})",
            report.classification, report.n_h, report.n_total
        )));
    }
    let processes = spec.processes();
    let np = processes.len();
    let n = spec.n_assets;
    let cojump_index = spec.cojump.as_ref().map(|_| n);
    let rho = spec.cojump.as_ref().map_or(0.0, |c| c.rho);
    // Column vector per asset: which processes move it.
    let movers: Vec<Vec<usize>> =
        (0..n).map(|a| (0..np).filter(|&p| processes[p].assets.contains(&a)).collect()).collect();
    let mut a = DMatrix::<f64>::zeros(np, np);
    let mut cross_self = 0.0;
    for (row, p) in processes.iter().enumerate() {
        for f in &p.feedback {
            match f {
                Feedback::Activity { source, kernel } => {
                    let v = kernel.integral()?;
                    for &q in &movers[*source] {
                        a[(row, q)] += v;
                    }
                }
                Feedback::Trend { first, second } => {
                    let v = product_integral(&first.1, &second.1)?;
                    if first.0 == second.0 {
                        for &q in &movers[first.0] {
                            a[(row, q)] += v;
                        }
                    } else if let Some(c) = cojump_index {
                        a[(row, c)] += rho * v;
                        if row == c {
                            cross_self += v;
                        }
                    }
                }
                Feedback::SignActivity { kernel } => {
                    if let Some(c) = cojump_index {
                        let v = kernel.integral()?;
                        a[(row, c)] += rho * v;
                        if row == c {
                            cross_self += v;
                        }
                    }
                }
                Feedback::Leverage { .. } => {}
            }
        }
    }
    if cojump_index.is_some() && 1.0 - rho * cross_self <= 0.0 {
        return Err(ModelError::NonStationary(format!(
            "co-jump denominator 1 - ρ∫Q^c_12 = {} <= 0",
            1.0 - rho * cross_self
        )));
    }
    let system = DMatrix::<f64>::identity(np, np) - a;
    let base = DVector::from_iterator(np, processes.iter().map(|p| p.baseline));
    let rates =
        system.lu().solve(&base).ok_or_else(|| ModelError::NonStationary("singular mean-intensity system".into()))?;
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(ModelError::NonStationary(format!(
            "mean-intensity system has no nonnegative solution: {:?}",
            rates.as_slice()
        )));
    }
    let assets = movers.iter().map(|ps| ps.iter().map(|&q| rates[q]).sum()).collect();
    Ok(MeanIntensity { assets, cojump: cojump_index.map(|c| rates[c]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_hawkes(n: &[f64], beta: f64) -> ModelSpec {
        let mut spec = ModelSpec::poisson(vec![1.0; n.len()]);
        for (i, v) in n.iter().enumerate() {
            spec.hawkes.push(KernelEntry { target: i, source: i, kernel: KernelFunction::exponential(v * beta, beta) });
        }
        spec
    }

    #[test]
    fn decoupled_mean_intensity() {
        let spec = diag_hawkes(&[0.5, 0.8], 1.3);
        let m = mean_intensity(&spec).unwrap();
        assert_relative_eq!(m.assets[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.assets[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn poisson_limit() {
        let spec = ModelSpec::poisson(vec![0.7, 0.3]);
        let m = mean_intensity(&spec).unwrap();
        assert_eq!(m.assets, vec![0.7, 0.3]);
        let e = endogeneity(&spec).unwrap();
        assert_eq!(e.n_h, 0.0);
        assert_eq!(e.classification, Classification::StationaryFiniteMean);
    }

    #[test]
    fn endogeneity_examples() {
        let e = endogeneity(&diag_hawkes(&[0.4, 0.4], 2.0)).unwrap();
        assert_relative_eq!(e.n_h, 0.4, epsilon = 1e-12);
        assert_relative_eq!(e.n_total, 0.4, epsilon = 1e-12);
        assert_eq!(e.classification, Classification::StationaryFiniteMean);
        let e = endogeneity(&diag_hawkes(&[1.1, 0.5], 2.0)).unwrap();
        assert_relative_eq!(e.n_h, 1.1, epsilon = 1e-12);
        assert_eq!(e.classification, Classification::Explosive);
    }

    #[test]
    fn zumbach_norm_of_exponential_trend_kernel() {
        let (n_z, omega) = (0.3f64, 1.7f64);
        let a = (2.0 * n_z / omega).sqrt();
        let mut spec = ModelSpec::poisson(vec![1.0]);
        spec.zumbach.push(KernelEntry { target: 0, source: 0, kernel: KernelFunction::exponential(a * omega, omega) });
        let e = endogeneity(&spec).unwrap();
        assert_relative_eq!(e.n_z_matrix[0][0], n_z, epsilon = 1e-12);
        assert_relative_eq!(e.n_total, n_z, epsilon = 1e-12);
    }

    #[test]
    fn infinite_mean_regime_is_flagged() {
        let mut spec = diag_hawkes(&[0.6], 1.0);
        spec.zumbach.push(KernelEntry {
            target: 0,
            source: 0,
            kernel: KernelFunction::exponential((2.0f64 * 0.5).sqrt(), 1.0),
        });
        let e = endogeneity(&spec).unwrap();
        assert_relative_eq!(e.n_total, 1.1, epsilon = 1e-12);
        assert_eq!(e.classification, Classification::StationaryInfiniteMeanConjectured);
        assert!(matches!(mean_intensity(&spec), Err(ModelError::NonStationary(_))));
    }

    #[test]
    fn cojump_mean_intensity_solves_coupled_system() {
        // Idiosyncratic processes with self-excitation, co-jump process driven by both
        // assets' activity and a cross trend.
        let mut spec = diag_hawkes(&[0.2, 0.3], 1.0);
        let mut cj = CoJumpSpec::constant(0.4, 0.5);
        cj.hawkes.push(SourceKernel { source: 0, kernel: KernelFunction::exponential(0.1, 1.0) });
        cj.hawkes.push(SourceKernel { source: 1, kernel: KernelFunction::exponential(0.05, 1.0) });
        cj.cross = Some(CoCross {
            first: KernelFunction::exponential(0.6, 1.0),
            second: KernelFunction::exponential(0.6, 2.0),
        });
        spec.cojump = Some(cj);
        let m = mean_intensity(&spec).unwrap();
        let l = &m.assets;
        let mc = m.cojump.unwrap();
        // Fixed-point identities written out by hand.
        let x = 0.36 / 3.0;
        assert_relative_eq!(mc, (0.4 + 0.1 * l[0] + 0.05 * l[1]) / (1.0 - 0.5 * x), epsilon = 1e-12);
        assert_relative_eq!(l[0] - mc, 1.0 + 0.2 * l[0], epsilon = 1e-12);
        assert_relative_eq!(l[1] - mc, 1.0 + 0.3 * l[1], epsilon = 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let mut spec = diag_hawkes(&[0.2, 0.3], 1.0);
        spec.zumbach_cross.push(CrossEntry {
            target: 0,
            other: 1,
            own: KernelFunction::exponential(0.3, 1.0),
            partner: KernelFunction::tabulated(0.5, vec![0.2, 0.1, 0.0]),
        });
        spec.cojump = Some(CoJumpSpec::constant(0.1, -0.25));
        let text = spec.to_toml_string().unwrap();
        let back = ModelSpec::from_toml_str(&text).unwrap();
        assert_eq!(spec, back);
        assert_eq!(spec.digest(), back.digest());
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        let mut spec = ModelSpec::poisson(vec![1.0, 1.0]);
        spec.zumbach_cross.push(CrossEntry {
            target: 1,
            other: 1,
            own: KernelFunction::exponential(0.3, 1.0),
            partner: KernelFunction::exponential(0.3, 1.0),
        });
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::poisson(vec![1.0, -1.0]);
        assert!(spec.validate().is_err());
        spec.baseline[1] = 1.0;
        spec.cojump = Some(CoJumpSpec::constant(0.1, 1.5));
        assert!(spec.validate().is_err());
    }
}
