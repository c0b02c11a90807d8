//! Binned moments of an event stream with batch-means standard errors.
//!
//! The stream is cut into segments of equal length. Each segment is binned with width
//! `dt` and treated as circular, so every lag uses all of its bins; the seam affects
//! `q` bins out of many thousands. Per bin `b`: `n_a(b)` jumps of asset `a`,
//! `p_a(b)` their signed sum, `g(b)` the sum of `ε⁰ε¹` over co-jumps and `c(b)` the
//! co-jump count. With segment means `n̄_a`, the stored moments are
//!
//! * `c[m][i][j]  = cov(n_i(b+m), n_j(b)) / dt²`; at `m = 0` this includes the
//!   same-event terms `λ̄_i/dt` and `μ̄_c/dt`;
//! * `comark[d][j] = cov(g(b+d), n_j(b)) / dt²` for `|d| ≤ q`;
//! * `leverage[k][j][l] = E[(n_j(b) - n̄_j) p_l(b-k)] / dt²`;
//! * `d[j][a][c][k1][k2] = E[(n_j(b) - n̄_j) p_a(b-k1) p_c(b-k2)] / dt³` over distinct
//!   events (same-event products inside a bin removed);
//! * `d_diagonal[m][i][j] = E[(n_i(b) - n̄_i) p_j(b-m)²] / dt²`, the raw diagonal of
//!   the three-point function, whose limit is `c[m][i][j]`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimateError, DEFAULT_SEGMENTS, MAX_LAGS};
use crate::simulate::EventStream;

/// Moments of one segment, or their mean or standard error over segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n_assets: usize,
    pub q: usize,
    pub dt: f64,
    /// Jump rate of each asset, co-jumps included.
    pub lambda: Vec<f64>,
    /// Co-jump rate.
    pub cojump_rate: f64,
    /// Rate of `ε⁰ε¹` over co-jumps.
    pub comark_rate: f64,
    pub c: Vec<f64>,
    pub comark: Vec<f64>,
    pub leverage: Vec<f64>,
    pub d: Vec<f64>,
    pub d_diagonal: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize, q: usize, dt: f64) -> Self {
        let l = q + 1;
        Self {
            n_assets: n,
            q,
            dt,
            lambda: vec![0.0; n],
            cojump_rate: 0.0,
            comark_rate: 0.0,
            c: vec![0.0; l * n * n],
            comark: vec![0.0; (2 * q + 1) * n],
            leverage: vec![0.0; l * n * n],
            d: vec![0.0; n * n * n * l * l],
            d_diagonal: vec![0.0; l * n * n],
        }
    }

    /// `C_ij` at a signed lag, `C_ij(-m) = C_ji(m)`.
    pub fn c(&self, lag: isize, i: usize, j: usize) -> f64 {
        let n = self.n_assets;
        if lag >= 0 {
            self.c[(lag as usize * n + i) * n + j]
        } else {
            self.c[((-lag) as usize * n + j) * n + i]
        }
    }

    pub fn comark(&self, lag: isize, j: usize) -> f64 {
        self.comark[(lag + self.q as isize) as usize * self.n_assets + j]
    }

    pub fn leverage(&self, k: usize, j: usize, l: usize) -> f64 {
        let n = self.n_assets;
        self.leverage[(k * n + j) * n + l]
    }

    fn d_index(&self, j: usize, a: usize, b: usize, k1: usize, k2: usize) -> usize {
        let n = self.n_assets;
        let l = self.q + 1;
        (((j * n + a) * n + b) * l + k1) * l + k2
    }

    pub fn d(&self, j: usize, a: usize, b: usize, k1: usize, k2: usize) -> f64 {
        self.d[self.d_index(j, a, b, k1, k2)]
    }

    pub fn d_diagonal(&self, m: usize, i: usize, j: usize) -> f64 {
        let n = self.n_assets;
        self.d_diagonal[(m * n + i) * n + j]
    }

    fn flatten(&self) -> Vec<f64> {
        let mut v = self.lambda.clone();
        v.push(self.cojump_rate);
        v.push(self.comark_rate);
        for part in [&self.c, &self.comark, &self.leverage, &self.d, &self.d_diagonal] {
            v.extend_from_slice(part);
        }
        v
    }

    fn unflatten(&self, v: &[f64]) -> Self {
        let mut out = self.clone();
        let mut at = 0;
        let mut take = |dst: &mut Vec<f64>| {
            let len = dst.len();
            dst.copy_from_slice(&v[at..at + len]);
            at += len;
        };
        take(&mut out.lambda);
        let mut rates = vec![0.0; 2];
        take(&mut rates);
        out.cojump_rate = rates[0];
        out.comark_rate = rates[1];
        take(&mut out.c);
        take(&mut out.comark);
        take(&mut out.leverage);
        take(&mut out.d);
        take(&mut out.d_diagonal);
        out
    }

    /// Mean and batch-means standard error over segments.
    pub fn aggregate(segments: &[Moments]) -> (Moments, Moments) {
        let s = segments.len() as f64;
        let flat: Vec<Vec<f64>> = segments.iter().map(Moments::flatten).collect();
        let len = flat[0].len();
        let mut mean = vec![0.0; len];
        let mut se = vec![0.0; len];
        for k in 0..len {
            let m = flat.iter().map(|f| f[k]).sum::<f64>() / s;
            let var = flat.iter().map(|f| (f[k] - m).powi(2)).sum::<f64>() / (s - 1.0).max(1.0);
            mean[k] = m;
            se[k] = (var / s).sqrt();
        }
        (segments[0].unflatten(&mean), segments[0].unflatten(&se))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub dt: f64,
    pub q: usize,
    pub segments: usize,
}

impl EstimateOptions {
    pub fn new(dt: f64, q: usize) -> Self {
        Self { dt, q, segments: DEFAULT_SEGMENTS }
    }
}

/// Correlation estimates with per-segment values for error propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub dt: f64,
    pub q: usize,
    pub n_assets: usize,
    /// Time covered by the segments.
    pub span: f64,
    pub bins_per_segment: usize,
    /// Jumps per asset inside the span.
    pub counts: Vec<usize>,
    pub cojumps: usize,
    pub spec_digest: String,
    pub mean: Moments,
    pub stderr: Moments,
    pub segments: Vec<Moments>,
}

impl CorrelationSet {
    /// Estimated mean rates `λ̄`.
    pub fn lambda(&self) -> &[f64] {
        &self.mean.lambda
    }

    /// Estimated co-jump rate `μ̄_c`.
    pub fn cojump_rate(&self) -> f64 {
        self.mean.cojump_rate
    }

    /// Writes one CSV per tensor plus `meta.json` and the full set as `segments.json`.
    pub fn write_bundle(&self, dir: &Path) -> Result<(), EstimateError> {
        let io = |e: std::io::Error| EstimateError::Io(e.to_string());
        fs::create_dir_all(dir).map_err(io)?;
        let (m, s) = (&self.mean, &self.stderr);
        let n = self.n_assets;
        let q = self.q;
        let mut c = String::from("lag,tau,i,j,value,stderr\n");
        let mut dd = String::from("lag,tau,i,j,value,stderr\n");
        let mut lev = String::from("lag,tau,j,l,value,stderr\n");
        for k in 0..=q {
            for i in 0..n {
                for j in 0..n {
                    let at = (k * n + i) * n + j;
                    let tau = k as f64 * self.dt;
                    c.push_str(&format!("{k},{tau:.16e},{i},{j},{:.16e},{:.16e}\n", m.c[at], s.c[at]));
                    lev.push_str(&format!("{k},{tau:.16e},{i},{j},{:.16e},{:.16e}\n", m.leverage[at], s.leverage[at]));
                    if k > 0 {
                        dd.push_str(&format!(
                            "{k},{tau:.16e},{i},{j},{:.16e},{:.16e}\n",
                            m.d_diagonal[at], s.d_diagonal[at]
                        ));
                    }
                }
            }
        }
        let mut d = String::from("j,a,b,k1,k2,value,stderr\n");
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for k1 in 0..=q {
                        for k2 in 0..=q {
                            let at = m.d_index(j, a, b, k1, k2);
                            d.push_str(&format!("{j},{a},{b},{k1},{k2},{:.16e},{:.16e}\n", m.d[at], s.d[at]));
                        }
                    }
                }
            }
        }
        let mut g = String::from("lag,j,value,stderr\n");
        for (k, (v, e)) in m.comark.iter().zip(&s.comark).enumerate() {
            let lag = (k / n) as isize - q as isize;
            g.push_str(&format!("{lag},{},{v:.16e},{e:.16e}\n", k % n));
        }
        let meta = serde_json::json!({
            "dt": self.dt,
            "q": self.q,
            "n_assets": n,
            "span": self.span,
            "segments": self.segments.len(),
            "bins_per_segment": self.bins_per_segment,
            "counts": self.counts,
            "cojumps": self.cojumps,
            "lambda": m.lambda,
            "lambda_stderr": s.lambda,
            "cojump_rate": m.cojump_rate,
            "spec_digest": self.spec_digest,
        });
        let files = [
            ("c.csv", c),
            ("d_diagonal.csv", dd),
            ("leverage.csv", lev),
            ("d.csv", d),
            ("comark.csv", g),
            ("meta.json", serde_json::to_string_pretty(&meta).expect("json value")),
            ("segments.json", serde_json::to_string(self).map_err(|e| EstimateError::Io(e.to_string()))?),
        ];
        for (name, text) in files {
            fs::write(dir.join(name), text).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_bundle(dir: &Path) -> Result<Self, EstimateError> {
        let text = fs::read_to_string(dir.join("segments.json")).map_err(|e| EstimateError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| EstimateError::Format(e.to_string()))
    }
}

/// Occupied bins of one segment, in bin order.
struct Bins {
    n_assets: usize,
    len: i64,
    bin: Vec<i64>,
    count: Vec<f64>,
    signed: Vec<f64>,
    comark: Vec<f64>,
    cojumps: Vec<f64>,
}

impl Bins {
    fn new(n_assets: usize, len: i64) -> Self {
        Self {
            n_assets,
            len,
            bin: Vec::new(),
            count: Vec::new(),
            signed: Vec::new(),
            comark: Vec::new(),
            cojumps: Vec::new(),
        }
    }

    fn slot(&mut self, b: i64) -> usize {
        if self.bin.last() != Some(&b) {
            self.bin.push(b);
            self.count.extend(std::iter::repeat_n(0.0, self.n_assets));
            self.signed.extend(std::iter::repeat_n(0.0, self.n_assets));
            self.comark.push(0.0);
            self.cojumps.push(0.0);
        }
        self.bin.len() - 1
    }

    fn n(&self, e: usize, a: usize) -> f64 {
        self.count[e * self.n_assets + a]
    }

    fn p(&self, e: usize, a: usize) -> f64 {
        self.signed[e * self.n_assets + a]
    }
}

pub fn estimate_correlations(stream: &EventStream, dt: f64, q: usize) -> Result<CorrelationSet, EstimateError> {
    estimate_correlations_with(stream, EstimateOptions::new(dt, q))
}

pub fn estimate_correlations_with(
    stream: &EventStream,
    options: EstimateOptions,
) -> Result<CorrelationSet, EstimateError> {
    let EstimateOptions { dt, q, segments } = options;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(EstimateError::InvalidInput(format!("bin width {dt} must be positive")));
    }
    if q == 0 || q > MAX_LAGS {
        return Err(EstimateError::InvalidInput(format!("lag count {q} outside 1..={MAX_LAGS}")));
    }
    if segments < 2 {
        return Err(EstimateError::InvalidInput("at least two segments are needed".into()));
    }
    if stream.events.is_empty() {
        return Err(EstimateError::Empty);
    }
    let required = 100.0 * q as f64 * dt;
    if stream.horizon < required {
        return Err(EstimateError::TooShort { horizon: stream.horizon, required });
    }
    let total_bins = (stream.horizon / dt).floor() as i64;
    let len = total_bins / segments as i64;
    if len <= 2 * q as i64 {
        return Err(EstimateError::TooShort { horizon: stream.horizon, required: (2 * q * segments) as f64 * dt });
    }
    let n = stream.n_assets;
    let mut bins: Vec<Bins> = (0..segments).map(|_| Bins::new(n, len)).collect();
    let mut counts = vec![0usize; n];
    let mut cojumps = 0usize;
    let events = &stream.events;
    for (k, e) in events.iter().enumerate() {
        let global = (e.t / dt).floor() as i64;
        let s = global / len;
        if s >= segments as i64 {
            break;
        }
        let seg = &mut bins[s as usize];
        let slot = seg.slot(global - s * len);
        let a = e.asset as usize;
        seg.count[slot * n + a] += 1.0;
        seg.signed[slot * n + a] += e.sign as f64;
        counts[a] += 1;
        if e.cojump && a == 1 && k > 0 {
            let partner = events[k - 1];
            seg.comark[slot] += (partner.sign * e.sign) as f64;
            seg.cojumps[slot] += 1.0;
            cojumps += 1;
        }
    }
    let per_segment: Vec<Moments> = bins.par_iter().map(|b| segment_moments(b, q, dt)).collect();
    let (mean, stderr) = Moments::aggregate(&per_segment);
    Ok(CorrelationSet {
        dt,
        q,
        n_assets: n,
        span: (len * segments as i64) as f64 * dt,
        bins_per_segment: len as usize,
        counts,
        cojumps,
        spec_digest: stream.spec_digest.clone(),
        mean,
        stderr,
        segments: per_segment,
    })
}

/// Moments of one circular segment.
fn segment_moments(bins: &Bins, q: usize, dt: f64) -> Moments {
    let n = bins.n_assets;
    let len = bins.len;
    let lf = len as f64;
    let l = q + 1;
    let qi = q as i64;
    let entries = bins.bin.len();

    // Wrapped view: tail copies shifted by -len, the segment, head copies shifted by +len.
    let mut ext: Vec<(i64, usize)> = Vec::with_capacity(entries + 64);
    ext.extend((0..entries).filter(|&e| bins.bin[e] >= len - qi).map(|e| (bins.bin[e] - len, e)));
    let offset = ext.len();
    ext.extend((0..entries).map(|e| (bins.bin[e], e)));
    ext.extend((0..entries).take_while(|&e| bins.bin[e] < qi).map(|e| (bins.bin[e] + len, e)));

    let sum = |f: &dyn Fn(usize) -> f64| (0..entries).map(f).sum::<f64>();
    let nbar: Vec<f64> = (0..n).map(|a| sum(&|e| bins.n(e, a)) / lf).collect();
    let psum: Vec<f64> = (0..n).map(|a| sum(&|e| bins.p(e, a))).collect();
    let p2sum: Vec<f64> = (0..n).map(|a| sum(&|e| bins.p(e, a).powi(2))).collect();
    let gsum = sum(&|e| bins.comark[e]);
    let gbar = gsum / lf;
    let cbar = sum(&|e| bins.cojumps[e]) / lf;

    let mut snn = vec![0.0; l * n * n];
    let mut sgn_pos = vec![0.0; l * n];
    let mut sgn_neg = vec![0.0; l * n];
    let mut snp = vec![0.0; l * n * n];
    let mut snp2 = vec![0.0; l * n * n];
    let mut spp = vec![0.0; l * n * n];
    for u in 0..entries {
        let bu = bins.bin[u];
        let mut pv = offset + u;
        while pv < ext.len() && ext[pv].0 - bu <= qi {
            let (bv, v) = ext[pv];
            let d = (bv - bu) as usize;
            for i in 0..n {
                let (nv, pvv) = (bins.n(v, i), bins.p(v, i));
                for j in 0..n {
                    let at = (d * n + i) * n + j;
                    snn[at] += nv * bins.n(u, j);
                    snp[at] += nv * bins.p(u, j);
                    snp2[at] += nv * bins.p(u, j).powi(2);
                    spp[(d * n + j) * n + i] += bins.p(u, j) * pvv;
                }
                sgn_pos[d * n + i] += bins.comark[v] * bins.n(u, i);
                sgn_neg[d * n + i] += bins.comark[u] * bins.n(v, i);
            }
            pv += 1;
        }
    }
    // Same-event products inside a bin are not distinct pairs.
    for a in 0..n {
        spp[a * n + a] -= nbar[a] * lf;
    }
    if n == 2 {
        spp[1] -= gsum;
        spp[2] -= gsum;
    }

    let mut m = Moments::zeros(n, q, dt);
    let dt2 = dt * dt;
    m.lambda = nbar.iter().map(|x| x / dt).collect();
    m.cojump_rate = cbar / dt;
    m.comark_rate = gbar / dt;
    for d in 0..l {
        for i in 0..n {
            for j in 0..n {
                let at = (d * n + i) * n + j;
                m.c[at] = (snn[at] - lf * nbar[i] * nbar[j]) / (lf * dt2);
                m.leverage[at] = (snp[at] - nbar[i] * psum[j]) / (lf * dt2);
                m.d_diagonal[at] = (snp2[at] - nbar[i] * p2sum[j]) / (lf * dt2);
            }
            m.comark[(q + d) * n + i] = (sgn_pos[d * n + i] - lf * gbar * nbar[i]) / (lf * dt2);
            if d > 0 {
                m.comark[(q - d) * n + i] = (sgn_neg[d * n + i] - lf * gbar * nbar[i]) / (lf * dt2);
            }
        }
    }

    // Three-point sums: Σ_b n_j(b) p_a(b-k1) p_c(b-k2) over distinct events.
    let mut raw = vec![0.0; n * n * n * l * l];
    let block = l * l;
    let mut items: Vec<(usize, usize, f64, f64, usize)> = Vec::new();
    let mut lo = 0;
    for v in 0..entries {
        let bv = bins.bin[v];
        while ext[lo].0 < bv - qi {
            lo += 1;
        }
        items.clear();
        for &(b, e) in &ext[lo..=offset + v] {
            let k = (bv - b) as usize;
            for a in 0..n {
                let c = bins.n(e, a);
                if c > 0.0 {
                    items.push((k, a, bins.p(e, a), c, e));
                }
            }
        }
        for j in 0..n {
            let w = bins.n(v, j);
            if w == 0.0 {
                continue;
            }
            let base_j = j * n * n * block;
            for &(kx, ax, px, nx, ex) in &items {
                let base = base_j + ax * n * block + kx * l;
                let wx = w * px;
                if wx != 0.0 {
                    for &(ky, ay, py, _, _) in &items {
                        raw[base + ay * block + ky] += wx * py;
                    }
                }
                raw[base + ax * block + kx] -= w * nx;
                if n == 2 && ax == 0 && bins.comark[ex] != 0.0 {
                    let g = w * bins.comark[ex];
                    // Asset pairs (0, 1) and (1, 0).
                    let (pair01, pair10) = (1, n);
                    raw[base_j + pair01 * block + kx * l + kx] -= g;
                    raw[base_j + pair10 * block + kx * l + kx] -= g;
                }
            }
        }
    }
    let dt3 = dt2 * dt;
    for j in 0..n {
        for a in 0..n {
            for c in 0..n {
                for k1 in 0..l {
                    for k2 in 0..l {
                        // Σ_b p_a(b-k1) p_c(b-k2) over the circular segment.
                        let pair =
                            if k1 >= k2 { spp[((k1 - k2) * n + a) * n + c] } else { spp[((k2 - k1) * n + c) * n + a] };
                        let at = m.d_index(j, a, c, k1, k2);
                        m.d[at] = (raw[at] - nbar[j] * pair) / (lf * dt3);
                    }
                }
            }
        }
    }
    m
}
