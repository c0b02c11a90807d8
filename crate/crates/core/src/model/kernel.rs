//! Scalar causal kernels used for activity, trend and leverage feedback.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::quad::integrate_panels;

/// A causal kernel `f(s)`, zero for `s < 0`.
///
/// * `Exponential`: `amplitude * exp(-rate * s)`.
/// * `PowerLaw`: `amplitude * (1 + s / cutoff)^(-exponent)`.
/// * `Tabulated`: piecewise-linear interpolation of `values` on the grid `k * step`,
///   zero beyond the last grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelFunction {
    Exponential { amplitude: f64, rate: f64 },
    PowerLaw { amplitude: f64, exponent: f64, cutoff: f64 },
    Tabulated { step: f64, values: Vec<f64> },
}

impl KernelFunction {
    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        Self::Exponential { amplitude, rate }
    }

    pub fn power_law(amplitude: f64, exponent: f64, cutoff: f64) -> Self {
        Self::PowerLaw { amplitude, exponent, cutoff }
    }

    pub fn tabulated(step: f64, values: Vec<f64>) -> Self {
        Self::Tabulated { step, values }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidKernel(what.to_string()));
        match self {
            Self::Exponential { amplitude, rate } => {
                if !amplitude.is_finite() || !rate.is_finite() || *rate <= 0.0 {
                    return bad("exponential kernel needs finite amplitude and rate > 0");
                }
            }
            Self::PowerLaw { amplitude, exponent, cutoff } => {
                if !amplitude.is_finite() || !exponent.is_finite() || *exponent <= 0.0 {
                    return bad("power-law kernel needs finite amplitude and exponent > 0");
                }
                if !cutoff.is_finite() || *cutoff <= 0.0 {
                    return bad("power-law cutoff must be > 0");
                }
            }
            Self::Tabulated { step, values } => {
                if !step.is_finite() || *step <= 0.0 {
                    return bad("tabulated grid step must be > 0");
                }
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return bad("tabulated kernel needs at least one finite value");
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { amplitude, rate } => amplitude * (-rate * s).exp(),
            Self::PowerLaw { amplitude, exponent, cutoff } => amplitude * (1.0 + s / cutoff).powf(-exponent),
            Self::Tabulated { step, values } => {
                let x = s / step;
                let k = x.floor() as usize;
                if k + 1 < values.len() {
                    let w = x - k as f64;
                    values[k] * (1.0 - w) + values[k + 1] * w
                } else if k + 1 == values.len() && x == k as f64 {
                    values[k]
                } else {
                    0.0
                }
            }
        }
    }

    /// Exponential parameters, if this kernel is an exponential.
    pub fn as_exponential(&self) -> Option<(f64, f64)> {
        match self {
            Self::Exponential { amplitude, rate } => Some((*amplitude, *rate)),
            _ => None,
        }
    }

    /// True when the kernel vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Exponential { amplitude, .. } | Self::PowerLaw { amplitude, .. } => *amplitude == 0.0,
            Self::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// End of the support (infinite for exponential and power-law forms).
    pub fn support_end(&self) -> f64 {
        match self {
            Self::Tabulated { step, values } => step * (values.len() - 1) as f64,
            _ => f64::INFINITY,
        }
    }

    /// `∫_0^∞ f(s) ds`.
    pub fn integral(&self) -> Result<f64, ModelError> {
        match self {
            Self::Exponential { amplitude, rate } => Ok(amplitude / rate),
            Self::PowerLaw { amplitude, exponent, cutoff } => {
                if *amplitude == 0.0 {
                    Ok(0.0)
                } else if *exponent <= 1.0 {
                    Err(ModelError::NonIntegrableKernel(format!("power-law exponent {exponent} <= 1")))
                } else {
                    Ok(amplitude * cutoff / (exponent - 1.0))
                }
            }
            Self::Tabulated { step, values } => Ok(trapezoid(*step, values)),
        }
    }

    /// `∫_a^b f(s) ds` with `f = 0` on negative times.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Exponential { amplitude, rate } => amplitude / rate * ((-rate * a).exp() - (-rate * b).exp()),
            Self::PowerLaw { amplitude, exponent, cutoff } => {
                let g = |s: f64| 1.0 + s / cutoff;
                if (*exponent - 1.0).abs() < 1e-12 {
                    amplitude * cutoff * (g(b).ln() - g(a).ln())
                } else {
                    amplitude * cutoff / (1.0 - exponent) * (g(b).powf(1.0 - exponent) - g(a).powf(1.0 - exponent))
                }
            }
            Self::Tabulated { step, values } => {
                let end = self.support_end().min(b);
                if end <= a {
                    return 0.0;
                }
                let mut breaks = vec![a];
                let first = (a / step).floor() as usize + 1;
                let mut k = first;
                while (k as f64) * step < end && k < values.len() {
                    breaks.push(k as f64 * step);
                    k += 1;
                }
                breaks.push(end);
                // Piecewise linear: the trapezoid rule is exact on each piece.
                breaks.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1]))).sum()
            }
        }
    }

    /// `∫_0^∞ f(s)^2 ds`.
    pub fn square_integral(&self) -> Result<f64, ModelError> {
        match self {
            Self::Exponential { amplitude, rate } => Ok(amplitude * amplitude / (2.0 * rate)),
            Self::PowerLaw { amplitude, exponent, cutoff } => {
                if *amplitude == 0.0 {
                    Ok(0.0)
                } else if 2.0 * exponent <= 1.0 {
                    Err(ModelError::NonIntegrableKernel(format!("squared power-law exponent {} <= 1", 2.0 * exponent)))
                } else {
                    Ok(amplitude * amplitude * cutoff / (2.0 * exponent - 1.0))
                }
            }
            Self::Tabulated { step, values } => {
                Ok(values.windows(2).map(|w| step * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0).sum())
            }
        }
    }

    /// `∫_t^∞ |f(s)| ds`, the mass left out by truncating at `t`.
    pub fn abs_tail_mass(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Self::Exponential { amplitude, rate } => amplitude.abs() / rate * (-rate * t).exp(),
            Self::PowerLaw { amplitude, exponent, cutoff } => {
                if *amplitude == 0.0 {
                    0.0
                } else if *exponent <= 1.0 {
                    f64::INFINITY
                } else {
                    amplitude.abs() * cutoff / (exponent - 1.0) * (1.0 + t / cutoff).powf(1.0 - exponent)
                }
            }
            Self::Tabulated { .. } => {
                let end = self.support_end();
                if t >= end {
                    return 0.0;
                }
                let mut breaks = self.breakpoints();
                breaks.retain(|b| *b > t);
                breaks.insert(0, t);
                integrate_panels(&breaks, |s| self.value(s).abs())
            }
        }
    }

    /// `sup_{u ≥ s} |f(u)|`, nonincreasing in `s`.
    pub fn envelope(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Exponential { .. } | Self::PowerLaw { .. } => self.value(s).abs(),
            Self::Tabulated { step, values } => {
                let k = (s / step).floor() as usize;
                if k >= values.len() {
                    return 0.0;
                }
                let here = self.value(s).abs();
                values[(k + 1).min(values.len())..].iter().fold(here, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Time after which the remaining absolute mass is below `tol` times the total.
    pub fn memory_horizon(&self, tol: f64) -> f64 {
        match self {
            Self::Exponential { rate, .. } => -tol.ln() / rate,
            Self::PowerLaw { exponent, cutoff, .. } => {
                if *exponent <= 1.0 {
                    f64::INFINITY
                } else {
                    cutoff * (tol.powf(1.0 / (1.0 - exponent)) - 1.0)
                }
            }
            Self::Tabulated { .. } => self.support_end(),
        }
    }

    /// Natural panel boundaries for numerical integration, starting at 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Exponential { rate, .. } => {
                let mut b = vec![0.0];
                let mut s = 0.25 / rate;
                while s < 80.0 / rate {
                    b.push(s);
                    s *= 2.0;
                }
                b.push(80.0 / rate);
                b
            }
            Self::PowerLaw { exponent, cutoff, .. } => {
                let mut b = vec![0.0];
                let end = cutoff * (1e-18f64.powf(-1.0 / exponent.max(1e-3)) - 1.0);
                let end = end.min(cutoff * 1e30);
                let mut s = 0.25 * cutoff;
                while s < end {
                    b.push(s);
                    s *= 2.0;
                }
                b.push(end);
                b
            }
            Self::Tabulated { step, values } => (0..values.len()).map(|k| k as f64 * step).collect(),
        }
    }
}

fn trapezoid(step: f64, values: &[f64]) -> f64 {
    values.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum()
}

/// `∫_0^∞ f(s) g(s) ds`, closed form for two exponentials, panel quadrature otherwise.
pub fn product_integral(f: &KernelFunction, g: &KernelFunction) -> Result<f64, ModelError> {
    if let (Some((a1, b1)), Some((a2, b2))) = (f.as_exponential(), g.as_exponential()) {
        return Ok(a1 * a2 / (b1 + b2));
    }
    if f == g {
        return f.square_integral();
    }
    if f.is_zero() || g.is_zero() {
        return Ok(0.0);
    }
    let decay = |k: &KernelFunction| match k {
        KernelFunction::PowerLaw { exponent, .. } => *exponent,
        _ => f64::INFINITY,
    };
    if decay(f) + decay(g) <= 1.0 {
        return Err(ModelError::NonIntegrableKernel("product of power laws decays too slowly".into()));
    }
    let end = f.support_end().min(g.support_end());
    let mut breaks: Vec<f64> = f.breakpoints().into_iter().chain(g.breakpoints()).collect();
    breaks.retain(|b| *b <= end);
    if end.is_finite() {
        breaks.push(end);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(integrate_panels(&breaks, |s| f.value(s) * g.value(s)))
}
