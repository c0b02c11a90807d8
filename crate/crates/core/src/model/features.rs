//! Exponential-kernel parametrization in terms of activity and trend features.
//!
//! With `h_j = ∫ β_j e^{-β_j(t-s)} dN^j_s` and `z_j = ∫ ω_j e^{-ω_j(t-s)} dP^j_s`,
//!
//! ```text
//! λ_i = λ_i∞ + Σ_j n^i_H,j h_j + Σ_j (a^i_Z,j z_j)² + a^i_× z_0 z_1
//! ```

use serde::{Deserialize, Serialize};

use super::{CrossEntry, KernelEntry, KernelFunction, ModelError, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureModel {
    pub baseline: Vec<f64>,
    /// Activity decay rates `β_j`.
    pub beta: Vec<f64>,
    /// Trend decay rates `ω_j`.
    pub omega: Vec<f64>,
    /// `n_h[i][j]`: weight of `h_j` in `λ_i`.
    pub n_h: Vec<Vec<f64>>,
    /// `a_z[i][j]`: amplitude of `z_j` in `λ_i`.
    pub a_z: Vec<Vec<f64>>,
    /// Weight of `z_0 z_1` in each `λ_i` (two assets only; empty otherwise).
    #[serde(default)]
    pub a_cross: Vec<f64>,
}

impl FeatureModel {
    /// Symmetric bivariate model: `a^i_Z,j = √(2n_Z/ω)`, `a^i_× = 2γn_Z/ω`, activity
    /// weight `n_h` on the diagonal only.
    pub fn symmetric(baseline: f64, n_h: f64, beta: f64, n_z: f64, gamma: f64, omega: f64) -> Self {
        let a = (2.0 * n_z / omega).sqrt();
        Self {
            baseline: vec![baseline; 2],
            beta: vec![beta; 2],
            omega: vec![omega; 2],
            n_h: vec![vec![n_h, 0.0], vec![0.0, n_h]],
            a_z: vec![vec![a; 2]; 2],
            a_cross: vec![2.0 * gamma * n_z / omega; 2],
        }
    }

    pub fn n_assets(&self) -> usize {
        self.baseline.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_assets();
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if n == 0 {
            return bad("feature model needs at least one asset");
        }
        if self.beta.len() != n || self.omega.len() != n {
            return bad("beta and omega need one rate per asset");
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.n_h) || !square(&self.a_z) {
            return bad("n_h and a_z must be n_assets × n_assets");
        }
        if !self.a_cross.is_empty() && (n != 2 || self.a_cross.len() != 2) {
            return bad("a_cross needs two assets and two entries");
        }
        let rates_ok = self.beta.iter().chain(&self.omega).all(|r| r.is_finite() && *r > 0.0);
        if !rates_ok {
            return bad("decay rates must be finite and positive");
        }
        Ok(())
    }

    /// Equivalent kernel specification.
    pub fn to_spec(&self) -> Result<ModelSpec, ModelError> {
        self.validate()?;
        let n = self.n_assets();
        let mut spec = ModelSpec::poisson(self.baseline.clone());
        for i in 0..n {
            for j in 0..n {
                if self.n_h[i][j] != 0.0 {
                    let b = self.beta[j];
                    spec.hawkes.push(KernelEntry {
                        target: i,
                        source: j,
                        kernel: KernelFunction::exponential(self.n_h[i][j] * b, b),
                    });
                }
                if self.a_z[i][j] != 0.0 {
                    let w = self.omega[j];
                    spec.zumbach.push(KernelEntry {
                        target: i,
                        source: j,
                        kernel: KernelFunction::exponential(self.a_z[i][j] * w, w),
                    });
                }
            }
        }
        for (i, &a) in self.a_cross.iter().enumerate() {
            if a != 0.0 {
                let j = 1 - i;
                spec.zumbach_cross.push(CrossEntry {
                    target: i,
                    other: j,
                    own: KernelFunction::exponential(a * self.omega[i], self.omega[i]),
                    partner: KernelFunction::exponential(self.omega[j], self.omega[j]),
                });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Intensities for given feature values.
    pub fn intensity(&self, h: &[f64], z: &[f64]) -> Vec<f64> {
        (0..self.n_assets())
            .map(|i| {
                let act: f64 = self.n_h[i].iter().zip(h).map(|(w, x)| w * x).sum();
                let trend: f64 = self.a_z[i].iter().zip(z).map(|(a, x)| (a * x).powi(2)).sum();
                let cross = self.a_cross.get(i).map_or(0.0, |a| a * z[0] * z[1]);
                self.baseline[i] + act + trend + cross
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::endogeneity;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_model_has_expected_norms() {
        let fm = FeatureModel::symmetric(1.0, 0.4, 2.0, 0.1, 0.5, 3.0);
        let e = endogeneity(&fm.to_spec().unwrap()).unwrap();
        assert_relative_eq!(e.n_h, 0.4, epsilon = 1e-12);
        for row in &e.n_z_matrix {
            for v in row {
                assert_relative_eq!(*v, 0.1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spec_kernels_reproduce_feature_intensity() {
        let fm = FeatureModel::symmetric(0.7, 0.3, 2.0, 0.2, 1.0, 1.5);
        let spec = fm.to_spec().unwrap();
        // One up-jump of asset 0 at time 0, evaluated at time t.
        let t = 0.4;
        let h = [2.0 * (-2.0f64 * t).exp(), 0.0];
        let z = [1.5 * (-1.5f64 * t).exp(), 0.0];
        let expect = fm.intensity(&h, &z);
        let mut direct = [0.7, 0.7];
        for e in &spec.hawkes {
            if e.source == 0 {
                direct[e.target] += e.kernel.value(t);
            }
        }
        for e in &spec.zumbach {
            if e.source == 0 {
                direct[e.target] += e.kernel.value(t).powi(2);
            }
        }
        for (i, v) in direct.iter().enumerate() {
            assert_relative_eq!(*v, expect[i], epsilon = 1e-12);
        }
    }
}
