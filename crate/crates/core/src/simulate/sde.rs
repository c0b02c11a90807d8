//! Euler-Maruyama paths of `dz_i = -ω_i z_i dt + ω_i √λ_i dW_i` with
//! `λ_i = λ_i∞ + Σ_j (a^i_Z,j z_j)² + a^i_× z_0 z_1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::tail::TailProblem;

/// Largest tolerated fraction of steps with a negative intensity.
pub const CLAMP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOptions {
    pub dt: f64,
    pub steps: u64,
    pub seed: u64,
    /// Correlation of the two Brownian drivers.
    pub driver_correlation: f64,
    pub z0: [f64; 2],
}

impl SdeOptions {
    pub fn new(dt: f64, steps: u64, seed: u64) -> Self {
        Self { dt, steps, seed, driver_correlation: 0.0, z0: [0.0; 2] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeSummary {
    pub steps: u64,
    /// Steps at which an intensity was negative and clamped to zero.
    pub clamped: u64,
    pub final_z: [f64; 2],
}

/// Streaming integrator; the visitor sees every step without storing the path.
#[derive(Debug, Clone)]
pub struct SdeRun {
    problem: TailProblem,
    options: SdeOptions,
}

impl SdeRun {
    pub fn new(problem: &TailProblem, options: SdeOptions) -> Result<Self, SimError> {
        problem.validate().map_err(|e| SimError::InvalidInput(e.to_string()))?;
        let o = &options;
        if !(o.dt > 0.0) || !o.dt.is_finite() {
            return Err(SimError::InvalidInput(format!("dt = {} must be positive", o.dt)));
        }
        if !(-1.0..=1.0).contains(&o.driver_correlation) {
            return Err(SimError::InvalidInput("driver correlation outside [-1, 1]".into()));
        }
        Ok(Self { problem: problem.clone(), options })
    }

    /// Integrates the path; `visit(k, z, λ)` is called after step `k = 1..=steps`
    /// with `λ` evaluated at the new state.
    pub fn run(&self, mut visit: impl FnMut(u64, [f64; 2], [f64; 2])) -> Result<SdeSummary, SimError> {
        let p = &self.problem;
        let o = &self.options;
        let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
        let rho = o.driver_correlation;
        let rho_c = (1.0 - rho * rho).sqrt();
        let sqdt = o.dt.sqrt();
        let decay = [1.0 - p.omega[0] * o.dt, 1.0 - p.omega[1] * o.dt];
        let mut z = o.z0;
        let mut clamped = 0u64;
        let mut lambda = p.intensity(z);
        for k in 1..=o.steps {
            if lambda[0] < 0.0 || lambda[1] < 0.0 {
                clamped += 1;
            }
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            let noise = [g0, rho * g0 + rho_c * g1];
            for i in 0..2 {
                z[i] = decay[i] * z[i] + p.omega[i] * (lambda[i].max(0.0)).sqrt() * sqdt * noise[i];
            }
            lambda = p.intensity(z);
            visit(k, z, lambda);
        }
        let fraction = clamped as f64 / o.steps.max(1) as f64;
        if fraction > CLAMP_TOLERANCE {
            return Err(SimError::StepSizeTooLarge { fraction });
        }
        Ok(SdeSummary { steps: o.steps, clamped, final_z: z })
    }
}

/// Sampled path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    pub times: Vec<f64>,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub clamped: u64,
}

impl SdePath {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,z1,z2,lambda1,lambda2\n");
        for k in 0..self.times.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.times[k], self.z1[k], self.z2[k], self.lambda1[k], self.lambda2[k]
            ));
        }
        s
    }
}

/// Path on `[0, horizon]` with step `dt`, keeping every `stride`-th state.
pub fn simulate_sde(problem: &TailProblem, horizon: f64, dt: f64, seed: u64, stride: u64) -> Result<SdePath, SimError> {
    if !(horizon > 0.0) {
        return Err(SimError::InvalidInput("horizon must be positive".into()));
    }
    let steps = (horizon / dt).round() as u64;
    let stride = stride.max(1);
    let run = SdeRun::new(problem, SdeOptions::new(dt, steps, seed))?;
    let cap = (steps / stride + 1) as usize;
    let mut path = SdePath {
        times: Vec::with_capacity(cap),
        z1: Vec::with_capacity(cap),
        z2: Vec::with_capacity(cap),
        lambda1: Vec::with_capacity(cap),
        lambda2: Vec::with_capacity(cap),
        clamped: 0,
    };
    let l0 = problem.intensity([0.0; 2]);
    for (v, x) in [(&mut path.times, 0.0), (&mut path.z1, 0.0), (&mut path.z2, 0.0)] {
        v.push(x);
    }
    path.lambda1.push(l0[0]);
    path.lambda2.push(l0[1]);
    let summary = run.run(|k, z, l| {
        if k % stride == 0 {
            path.times.push(k as f64 * dt);
            path.z1.push(z[0]);
            path.z2.push(z[1]);
            path.lambda1.push(l[0]);
            path.lambda2.push(l[1]);
        }
    })?;
    path.clamped = summary.clamped;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(omega: f64, baseline: f64) -> TailProblem {
        TailProblem {
            omega: [omega; 2],
            a_z: [[0.0; 2]; 2],
            a_cross: [0.0; 2],
            baseline: [baseline; 2],
            symmetric: None,
        }
    }

    #[test]
    fn ornstein_uhlenbeck_variance() {
        // Stationary variance ω²λ∞/(2ω) = ωλ∞/2.
        let (omega, baseline) = (2.0, 1.5);
        let run = SdeRun::new(&ou(omega, baseline), SdeOptions::new(1e-3, 2_000_000, 5)).unwrap();
        let (mut s, mut n) = (0.0, 0.0);
        run.run(|k, z, _| {
            if k > 10_000 {
                s += z[0] * z[0] + z[1] * z[1];
                n += 2.0;
            }
        })
        .unwrap();
        let var = s / n;
        let expect = omega * baseline / 2.0;
        assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
    }

    #[test]
    fn driver_correlation_is_applied() {
        let mut o = SdeOptions::new(1e-3, 1_000_000, 9);
        o.driver_correlation = 0.6;
        let run = SdeRun::new(&ou(1.0, 1.0), o).unwrap();
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        run.run(|_, z, _| {
            xy += z[0] * z[1];
            xx += z[0] * z[0];
            yy += z[1] * z[1];
        })
        .unwrap();
        let c = xy / (xx * yy).sqrt();
        assert!((c - 0.6).abs() < 0.05, "{c}");
    }

    #[test]
    fn path_is_recorded_with_stride() {
        let p = TailProblem::symmetric(0.3, 0.5, 1.0, 1.0).unwrap();
        let path = simulate_sde(&p, 10.0, 0.01, 1, 10).unwrap();
        assert_eq!(path.times.len(), 101);
        assert!(path.lambda1.iter().all(|l| *l >= 0.0));
        let again = simulate_sde(&p, 10.0, 0.01, 1, 10).unwrap();
        assert_eq!(path, again);
    }
}
