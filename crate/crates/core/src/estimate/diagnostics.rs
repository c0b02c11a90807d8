//! Leverage and Zumbach correlators between window volatility and past or future
//! aggregated returns.
//!
//! The stream is cut into windows of length `window`, each split into `sub_bins` bins.
//! `σ²_a(t)` is the mean squared bin return of asset `a` in window `t`, `r_a(t)` its
//! window return and `R_a(t, τ)` the sum of `r_a` over the `|τ|` windows after (`τ > 0`)
//! or before (`τ < 0`) window `t`. For every ordered pair (volatility asset, return
//! asset) both `corr(σ², R)` and `corr(σ², R²)` are reported with batch-means errors.

use serde::{Deserialize, Serialize};

use super::{EstimateError, DEFAULT_SEGMENTS};
use crate::simulate::EventStream;

/// Correlator values and errors indexed like `DiagnosticCurves::lags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlator {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCurves {
    pub volatility_asset: usize,
    pub return_asset: usize,
    /// `corr(σ²_t, R_{t,τ})`.
    pub leverage: Correlator,
    /// `corr(σ²_t, R²_{t,τ})`.
    pub zumbach: Correlator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCurves {
    pub window: f64,
    pub lags: Vec<i64>,
    pub pairs: Vec<PairCurves>,
}

impl DiagnosticCurves {
    pub fn pair(&self, volatility_asset: usize, return_asset: usize) -> Option<&PairCurves> {
        self.pairs.iter().find(|p| p.volatility_asset == volatility_asset && p.return_asset == return_asset)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("vol_asset,ret_asset,lag,leverage,leverage_stderr,zumbach,zumbach_stderr\n");
        for p in &self.pairs {
            for (k, lag) in self.lags.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    p.volatility_asset,
                    p.return_asset,
                    lag,
                    p.leverage.value[k],
                    p.leverage.stderr[k],
                    p.zumbach.value[k],
                    p.zumbach.stderr[k]
                ));
            }
        }
        s
    }
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn diagnostics_leverage_zumbach(
    stream: &EventStream,
    window: f64,
    max_lag: usize,
    sub_bins: usize,
) -> Result<DiagnosticCurves, EstimateError> {
    if !(window > 0.0) || sub_bins == 0 || max_lag == 0 {
        return Err(EstimateError::InvalidInput("window, sub-bins and lags must be positive".into()));
    }
    let windows = (stream.horizon / window).floor() as usize;
    if windows < 100 {
        return Err(EstimateError::TooShort { horizon: stream.horizon, required: 100.0 * window });
    }
    let segments = DEFAULT_SEGMENTS;
    let per = windows / segments;
    if per <= 2 * max_lag + 2 {
        return Err(EstimateError::TooShort {
            horizon: stream.horizon,
            required: (segments * (2 * max_lag + 3)) as f64 * window,
        });
    }
    let n = stream.n_assets;
    let bins = windows * sub_bins;
    let width = window / sub_bins as f64;
    let mut bin_ret = vec![vec![0.0; bins]; n];
    for e in &stream.events {
        let b = (e.t / width).floor() as usize;
        if b < bins {
            bin_ret[e.asset as usize][b] += e.sign as f64;
        }
    }
    let vol: Vec<Vec<f64>> = bin_ret
        .iter()
        .map(|r| r.chunks(sub_bins).map(|c| c.iter().map(|x| x * x).sum::<f64>() / sub_bins as f64).collect())
        .collect();
    let ret: Vec<Vec<f64>> = bin_ret.iter().map(|r| r.chunks(sub_bins).map(|c| c.iter().sum()).collect()).collect();
    let lags: Vec<i64> = (-(max_lag as i64)..=max_lag as i64).filter(|l| *l != 0).collect();

    let mut pairs = Vec::new();
    for va in 0..n {
        for ra in 0..n {
            let prefix: Vec<f64> = std::iter::once(0.0)
                .chain(ret[ra].iter().scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                }))
                .collect();
            let mut lev = vec![Vec::new(); lags.len()];
            let mut zum = vec![Vec::new(); lags.len()];
            for s in 0..segments {
                // Windows whose past and future lags stay inside the segment.
                let lo = s * per + max_lag;
                let hi = (s + 1) * per - max_lag;
                let sigma = &vol[va][lo..hi];
                for (k, &lag) in lags.iter().enumerate() {
                    let agg: Vec<f64> = (lo..hi)
                        .map(|t| {
                            if lag > 0 {
                                prefix[t + 1 + lag as usize] - prefix[t + 1]
                            } else {
                                prefix[t] - prefix[t - (-lag) as usize]
                            }
                        })
                        .collect();
                    let sq: Vec<f64> = agg.iter().map(|x| x * x).collect();
                    lev[k].push(correlation(sigma, &agg));
                    zum[k].push(correlation(sigma, &sq));
                }
            }
            let reduce = |v: &Vec<Vec<f64>>| {
                let (value, stderr) = v
                    .iter()
                    .map(|xs| {
                        let s = xs.len() as f64;
                        let m = xs.iter().sum::<f64>() / s;
                        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (s - 1.0);
                        (m, (var / s).sqrt())
                    })
                    .unzip();
                Correlator { value, stderr }
            };
            pairs.push(PairCurves {
                volatility_asset: va,
                return_asset: ra,
                leverage: reduce(&lev),
                zumbach: reduce(&zum),
            });
        }
    }
    Ok(DiagnosticCurves { window, lags, pairs })
}
