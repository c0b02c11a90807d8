//! Feature state of an exponential-kernel model between events.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::FeatureModel;

/// Activity features `h`, trend features `z` and the time they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureState {
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub t_last: f64,
}

impl FeatureState {
    pub fn empty(n_assets: usize) -> Self {
        Self { h: vec![0.0; n_assets], z: vec![0.0; n_assets], t_last: 0.0 }
    }

    /// Features decayed to time `t`.
    pub fn decayed(&self, model: &FeatureModel, t: f64) -> Result<Self, SimError> {
        if t < self.t_last {
            return Err(SimError::TimeReversal { t, t_last: self.t_last });
        }
        let dt = t - self.t_last;
        let h = self.h.iter().zip(&model.beta).map(|(x, b)| x * (-b * dt).exp()).collect();
        let z = self.z.iter().zip(&model.omega).map(|(x, w)| x * (-w * dt).exp()).collect();
        Ok(Self { h, z, t_last: t })
    }

    /// Applies a jump of `asset` with `sign` at the state time.
    pub fn jump(&mut self, model: &FeatureModel, asset: usize, sign: f64) {
        self.h[asset] += model.beta[asset];
        self.z[asset] += model.omega[asset] * sign;
    }
}

/// Intensities at time `t` from a feature state.
pub fn intensity_at(model: &FeatureModel, state: &FeatureState, t: f64) -> Result<Vec<f64>, SimError> {
    let s = state.decayed(model, t)?;
    Ok(model.intensity(&s.h, &s.z))
}
