//! Acceptance gate: every criterion at its stated tolerance, one PASS/FAIL line each.
//!
//! Criteria with a documented divergence still print FAIL but do not fail the run; the
//! divergence itself is asserted, so a change in behavior is reported.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mqhawkes::asymptotics::{rows, KernelExponents, Param, Regime, TableRow};
use mqhawkes::estimate::{
    diagnostics_leverage_zumbach, estimate_correlations_with, yw_residual_two_point, CorrelationSet, Correlator,
    EstimateOptions, Moments,
};
use mqhawkes::model::{
    check_positivity, endogeneity, mean_intensity, CoJumpSpec, CrossEntry, FeatureModel, KernelEntry, KernelFunction,
    ModelSpec,
};
use mqhawkes::simulate::{simulate_events, simulate_events_with, EventStream, SdeOptions, SimError, SimOptions};
use mqhawkes::tail::{alpha0, alpha_small_nz, f_infinity, sample_sde, solve_alpha, SamplingConfig, TailProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// What the gate expects from a criterion.
enum Expect {
    Pass,
    /// Fails for a documented reason; `run` asserts the failure has the documented shape.
    KnownDivergence(&'static str),
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    expect: Expect,
    run: fn() -> Outcome,
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn symmetric(n_z: f64, gamma: f64) -> TailProblem {
    TailProblem::symmetric(n_z, gamma, 1.0, 1.0).unwrap()
}

fn alpha(n_z: f64, gamma: f64) -> f64 {
    solve_alpha(&symmetric(n_z, gamma), 512, None).unwrap().alpha
}

fn exact_point() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for gamma in ["0", "0.5", "1.0", "1.5"] {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_mqh"))
            .args(["--format", "json", "tail", "--nz", "0.5", "--gamma", gamma, "--grid", "512"])
            .output()
            .unwrap();
        slowest = slowest.max(start.elapsed());
        if !out.status.success() {
            return Outcome::new(false, format!("gamma={gamma}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        worst = worst.max((v["alpha"].as_f64().unwrap() - 4.0).abs());
    }
    Outcome::new(
        worst < 1e-3 && slowest < Duration::from_secs(10),
        format!("max |alpha-4| = {worst:.2e}, slowest point {:.2}s", slowest.as_secs_f64()),
    )
}

fn isotropic() -> Outcome {
    let worst = [0.2, 0.4, 0.6, 0.9].iter().map(|&n| (alpha(n, 0.0) - (2.0 + 1.0 / n)).abs()).fold(0.0, f64::max);
    Outcome::new(worst < 1e-6, format!("max |alpha-(2+1/nz)| = {worst:.2e}"))
}

/// Least-squares coefficients of `y = c2 x² + c4 x⁴`.
fn even_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut s4, mut s6, mut s8, mut t2, mut t4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in x.iter().zip(y) {
        let x2 = x * x;
        s4 += x2 * x2;
        s6 += x2 * x2 * x2;
        s8 += x2 * x2 * x2 * x2;
        t2 += y * x2;
        t4 += y * x2 * x2;
    }
    let det = s4 * s8 - s6 * s6;
    ((t2 * s8 - t4 * s6) / det, (s4 * t4 - s6 * t2) / det)
}

/// Least-squares coefficients of `y = a + b x + c x²`; returns `c`.
fn quadratic_fit(x: &[f64], y: &[f64]) -> f64 {
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&x, &y) in x.iter().zip(y) {
        let p = [1.0, x, x * x];
        for i in 0..3 {
            r[i] += p[i] * y;
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let mut mc = m;
    for i in 0..3 {
        mc[i][2] = r[i];
    }
    det3(&mc) / det3(&m)
}

fn small_gamma_curvature() -> Outcome {
    let gammas: Vec<f64> = (0..=5).map(|k| k as f64 / 10.0).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (n_z, target, tol) in [(0.4, -0.176, 0.02), (0.6, 0.064, 0.01)] {
        let y: Vec<f64> = gammas.iter().map(|&g| alpha(n_z, g) - alpha0(n_z)).collect();
        let (c2, c4) = even_fit(&gammas, &y);
        pass &= (c2 - target).abs() <= tol;
        detail.push(format!("nz={n_z}: c2={c2:.4} (c4={c4:.3}, plain quadratic {:.4})", quadratic_fit(&gammas, &y)));
    }
    Outcome::new(pass, detail.join("; "))
}

fn small_nz() -> Outcome {
    let worst = [0.02, 0.03, 0.04, 0.05, 0.06]
        .iter()
        .map(|&n| {
            let closed = alpha_small_nz(n, 1.0).unwrap().alpha;
            ((alpha(n, 1.0) - closed) / closed).abs()
        })
        .fold(0.0, f64::max);
    Outcome::new(worst < 0.02, format!("max relative difference {:.3}%", 100.0 * worst))
}

fn large_nz_profile() -> Outcome {
    let start = Instant::now();
    let problem = symmetric(10.0, 1.0);
    let sol = solve_alpha(&problem, 512, None).unwrap();
    let finf = f_infinity(1.0, sol.m).unwrap();
    let top = finf.iter().fold(0.0f64, |m, v| m.max(*v));
    let sup = sol.f.iter().zip(&finf).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / top;
    let options = SdeOptions::new(1e-3, 10_000_000, 1);
    let config = SamplingConfig::for_problem(&problem, options.dt, options.steps);
    let sample = sample_sde(&problem, options, config).unwrap();
    let chi = sample.chi_square(&sol.f).unwrap();
    let elapsed = start.elapsed();
    Outcome::new(
        sup < 0.01 && chi.p_value > 0.01 && elapsed < Duration::from_secs(120),
        format!(
            "sup|F-F_inf|/max F_inf = {sup:.2e}; chi2 = {:.1} on {} dof, p = {:.3} ({} samples); {:.1}s",
            chi.statistic,
            chi.dof,
            chi.p_value,
            sample.histogram.total(),
            elapsed.as_secs_f64()
        ),
    )
}

fn tail_consistency() -> Outcome {
    let problem = symmetric(0.4, 0.0);
    let options = SdeOptions::new(0.01, 100_000_000, 11);
    let mut config = SamplingConfig::for_problem(&problem, options.dt, options.steps);
    config.hill_fraction = 1e-3;
    let sample = sample_sde(&problem, options, config).unwrap();
    let Some(hill) = sample.hill else {
        return Outcome::new(false, "no Hill estimate");
    };
    let target = alpha(0.4, 0.0) - 2.0;
    let rel = (hill.mu - target) / target;
    Outcome::new(
        rel.abs() < 0.1,
        format!("hill mu = {:.3} ± {:.3} (k = {}), alpha-2 = {target:.3}", hill.mu, hill.stderr, hill.k),
    )
}

fn stats_corr(stream: &EventStream, dt: f64, q: usize) -> CorrelationSet {
    estimate_correlations_with(stream, EstimateOptions { dt, q, segments: 20 }).unwrap()
}

fn mean_rates() -> Outcome {
    let spec = FeatureModel::symmetric(1.0, 0.4, 1.0, 0.1, 0.0, 1.0).to_spec().unwrap();
    let e = endogeneity(&spec).unwrap();
    let nz_ok = e.n_z_matrix.iter().flatten().all(|v| (v - 0.1).abs() < 1e-12);
    // Rows of N_H + N_Z sum to 0.6: λ̄ = λ∞ / (1 - 0.6).
    let oracle = 1.0 / (1.0 - 0.4 - 0.2);
    let lib = mean_intensity(&spec).unwrap().assets;
    let lib_ok = lib.iter().all(|v| (v - oracle).abs() < 1e-9);
    let stream = simulate_events(&spec, 1e6 / (2.0 * oracle), 7).unwrap();
    let corr = stats_corr(&stream, 1.0, 1);
    let z: Vec<f64> = (0..2).map(|i| (corr.mean.lambda[i] - oracle) / corr.stderr.lambda[i]).collect();
    Outcome::new(
        nz_ok && lib_ok && z.iter().all(|z| z.abs() < 2.0),
        format!(
            "{} events; rates {:.4}, {:.4} vs {oracle}; z = {:.2}, {:.2}",
            stream.jump_count(),
            corr.mean.lambda[0],
            corr.mean.lambda[1],
            z[0],
            z[1]
        ),
    )
}

fn cojump_identity() -> Outcome {
    let (mu_c, rho) = (0.5, 0.5);
    let mut spec = ModelSpec::poisson(vec![1.0, 1.0]);
    for i in 0..2 {
        spec.hawkes.push(KernelEntry { target: i, source: i, kernel: KernelFunction::exponential(0.3, 1.0) });
    }
    spec.cojump = Some(CoJumpSpec::constant(mu_c, rho));
    let stream = simulate_events(&spec, 2e5, 5).unwrap();
    let corr = stats_corr(&stream, 1.0, 1);
    let target = rho * mu_c;
    let z = (corr.mean.comark_rate - target) / corr.stderr.comark_rate;
    let lib = mean_intensity(&spec).unwrap().cojump.unwrap_or(f64::NAN);
    Outcome::new(
        z.abs() < 2.0 && (lib - mu_c).abs() < 1e-12,
        format!(
            "{} co-jumps; mean dP0 dP1 rate {:.4} vs {target}; z = {z:.2}",
            stream.cojump_count(),
            corr.mean.comark_rate
        ),
    )
}

/// Univariate ZHawkes stream shared by the Yule-Walker criteria.
fn zhawkes() -> &'static (ModelSpec, EventStream, CorrelationSet) {
    static CELL: OnceLock<(ModelSpec, EventStream, CorrelationSet)> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = ModelSpec::load(&data("zhawkes.toml")).unwrap();
        let stream = simulate_events(&spec, 4e5, 2).unwrap();
        let corr = stats_corr(&stream, 0.25, 24);
        (spec, stream, corr)
    })
}

fn yule_walker() -> Outcome {
    let (spec, _, corr) = zhawkes();
    let matched = yw_residual_two_point(corr, spec).unwrap().score;
    let mut perturbed = spec.clone();
    for e in &mut perturbed.hawkes {
        let (a, b) = e.kernel.as_exponential().unwrap();
        e.kernel = KernelFunction::exponential(1.5 * a, b);
    }
    let mismatched = yw_residual_two_point(corr, &perturbed).unwrap().score;
    let poisson = ModelSpec::poisson(vec![2.0]);
    let pcorr = stats_corr(&simulate_events(&poisson, 4e5, 3).unwrap(), 0.25, 24);
    let zero = yw_residual_two_point(&pcorr, &poisson).unwrap().score;
    Outcome::new(
        matched < 4.0 && zero < 4.0 && mismatched > matched,
        format!("matched {matched:.2}, poisson zero-kernel {zero:.2}, 1.5 n_H perturbed {mismatched:.2}"),
    )
}

/// Batch-means `|mean| / stderr` of per-segment values.
fn t_stat(x: &[f64]) -> f64 {
    let s = x.len() as f64;
    let mean = x.iter().sum::<f64>() / s;
    let var = x.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (s - 1.0);
    mean.abs() / (var / s).sqrt()
}

/// The binned diagonal equals `C(τ) + dt·D(τ,τ)`; the identity holds as `dt → 0`, so the
/// difference is extrapolated from bin widths `h` and `2h` at the same lags.
fn three_point_diagonal() -> Outcome {
    let (_, stream, _) = zhawkes();
    let (h, lags) = (0.05, 24);
    let fine = stats_corr(stream, h, 2 * lags);
    let coarse = stats_corr(stream, 2.0 * h, lags);
    let gap = |g: &Moments, m: usize| g.d_diagonal(m, 0, 0) - g.c(m as isize, 0, 0);
    let (mut worst, mut single) = (0.0f64, 0.0f64);
    for m in 1..=lags {
        let pairs = fine.segments.iter().zip(&coarse.segments);
        let extrapolated: Vec<f64> = pairs.map(|(f, c)| 2.0 * gap(f, 2 * m) - gap(c, m)).collect();
        let raw: Vec<f64> = coarse.segments.iter().map(|c| gap(c, m)).collect();
        worst = worst.max(t_stat(&extrapolated));
        single = single.max(t_stat(&raw));
    }
    Outcome::new(
        worst < 3.0,
        format!(
            "max |D(t,t)-C(t)|/stderr over {lags} lags extrapolated to dt = 0: {worst:.2} (at dt = {}: {single:.1})",
            2.0 * h
        ),
    )
}

/// Random exponential activity kernels on one or two assets with spectral radius `n_h`.
fn random_hawkes(rng: &mut ChaCha8Rng, n_h: f64) -> ModelSpec {
    let n = rng.gen_range(1..=2);
    let baseline: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let w: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.1..1.0)).collect()).collect();
    // Spectral radius of a positive 1×1 or 2×2 matrix.
    let radius = if n == 1 {
        w[0][0]
    } else {
        let (tr, det) = (w[0][0] + w[1][1], w[0][0] * w[1][1] - w[0][1] * w[1][0]);
        0.5 * (tr + (tr * tr - 4.0 * det).sqrt())
    };
    let mut spec = ModelSpec::poisson(baseline);
    for (i, row) in w.iter().enumerate() {
        for (j, weight) in row.iter().enumerate() {
            let rate = rng.gen_range(0.5..2.0);
            let integral = n_h * weight / radius;
            spec.hawkes.push(KernelEntry {
                target: i,
                source: j,
                kernel: KernelFunction::exponential(integral * rate, rate),
            });
        }
    }
    spec
}

fn stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut exploded, mut stationary) = (0, 0);
    let mut notes = Vec::new();
    for k in 0..20 {
        let spec = random_hawkes(&mut rng, 1.1);
        let radius = endogeneity(&spec).unwrap().n_h;
        match simulate_events_with(&spec, 1e9, k, SimOptions::for_spec(&spec)) {
            Err(SimError::Exploded { .. }) if (radius - 1.1).abs() < 1e-9 => exploded += 1,
            other => notes.push(format!("supercritical #{k}: {:?}", other.map(|s| s.events.len()))),
        }
    }
    for k in 0..20 {
        let spec = random_hawkes(&mut rng, 0.9);
        let radius = endogeneity(&spec).unwrap().n_h;
        match simulate_events(&spec, 2000.0, 100 + k) {
            Ok(s) if s.horizon == 2000.0 && (radius - 0.9).abs() < 1e-9 => stationary += 1,
            other => notes.push(format!("subcritical #{k}: {:?}", other.map(|s| s.horizon))),
        }
    }
    let mut detail = format!("{exploded}/20 exploded at n_H = 1.1, {stationary}/20 reached the horizon at n_H = 0.9");
    for n in notes {
        detail.push_str("; ");
        detail.push_str(&n);
    }
    Outcome::new(exploded == 20 && stationary == 20, detail)
}

/// Bivariate intensities `λ_i = λ∞ + φ_i * dN^i + (∫u_i dP⁰ + ∫v_i dP¹)²`; with
/// `excess > 0` the cross term is inflated and the form becomes indefinite.
fn gram_spec(rng: &mut ChaCha8Rng, excess: f64) -> ModelSpec {
    let mut spec = ModelSpec::poisson(vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]);
    let scale = (1.0 + excess).sqrt();
    for i in 0..2 {
        let (u, ru) = (rng.gen_range(0.05..0.4), rng.gen_range(0.5..2.0));
        let (v, rv) = (rng.gen_range(0.05..0.4), rng.gen_range(0.5..2.0));
        let (own, partner) = if i == 0 { ((u, ru), (v, rv)) } else { ((v, rv), (u, ru)) };
        spec.zumbach.push(KernelEntry { target: i, source: 0, kernel: KernelFunction::exponential(u, ru) });
        spec.zumbach.push(KernelEntry { target: i, source: 1, kernel: KernelFunction::exponential(v, rv) });
        spec.zumbach_cross.push(CrossEntry {
            target: i,
            other: 1 - i,
            own: KernelFunction::exponential(2f64.sqrt() * scale * own.0, own.1),
            partner: KernelFunction::exponential(2f64.sqrt() * scale * partner.0, partner.1),
        });
        let phi = rng.gen_range(0.0..0.3);
        spec.hawkes.push(KernelEntry { target: i, source: i, kernel: KernelFunction::exponential(phi, 1.0) });
    }
    spec
}

fn positivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let accepted = (0..50).filter(|_| check_positivity(&gram_spec(&mut rng, 0.0), 32, 0.25).ok).count();
    let rejected = (0..50)
        .filter(|k| {
            let spec = if k % 2 == 0 {
                // Without the activity diagonal the inflated cross term leaves a negative
                // eigenvalue in the span of the trend kernels.
                let excess = rng.gen_range(0.1..1.0);
                let mut spec = gram_spec(&mut rng, excess);
                spec.hawkes.clear();
                spec
            } else {
                // Negative time-diagonal activity weight.
                let mut spec = gram_spec(&mut rng, 0.0);
                let a = -rng.gen_range(0.05..0.5);
                spec.hawkes[0].kernel = KernelFunction::exponential(a, 1.0);
                spec
            };
            !check_positivity(&spec, 32, 0.25).ok
        })
        .count();
    Outcome::new(
        accepted == 50 && rejected == 50,
        format!("accepted {accepted}/50 Gram specs, rejected {rejected}/50 perturbed"),
    )
}

fn random_exponents(rng: &mut ChaCha8Rng, regime: Regime) -> KernelExponents {
    let eps_max = if regime == Regime::Critical { 0.5 } else { 1.0 };
    let mut eps = || rng.gen_range(0.01..eps_max - 0.01);
    let (eps_d, eps_o) = (eps(), eps());
    let mut rho = || rng.gen_range(0.51..2.5);
    KernelExponents { eps_d, eps_o, rho_d: rho(), rho_o: rho(), rho_x: rho(), regime }
}

/// Largest jump across the boundary of `row` over 100 random points, moving each
/// parameter in turn; also the number of boundary points found.
fn row_gap(row: &TableRow, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let mut gap = 0.0f64;
    let mut found = 0;
    for _ in 0..100 {
        let k = random_exponents(rng, row.regime);
        for p in Param::ALL {
            if let Some(b) = row.boundary_point(&k, p, 2.5) {
                if b.validate().is_ok() && row.margin(&b).abs() < 1e-9 {
                    found += 1;
                    gap = gap.max(row.boundary_gap(&b));
                }
            }
        }
    }
    (gap, found)
}

fn table_continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut continuous = true;
    let mut critical_jump = true;
    let mut detail = Vec::new();
    for regime in [Regime::NonCritical, Regime::Critical] {
        for row in rows(regime) {
            let (gap, found) = row_gap(row, &mut rng);
            let ok = found > 0 && gap < 1e-8;
            continuous &= ok;
            if regime == Regime::Critical {
                critical_jump &= gap > 0.5;
            } else {
                assert!(ok, "{row:?}: non-critical row discontinuous (gap {gap:e}, {found} boundary points)");
            }
            detail.push(format!("{:?}/{:?} gap {gap:.1e} ({found} pts)", row.exponent, regime));
        }
    }
    assert!(continuous || critical_jump, "critical rows changed shape: {}", detail.join(", "));
    Outcome::new(continuous, detail.join(", "))
}

fn diagnostics() -> Outcome {
    let z_max = |c: &Correlator, lags: &[i64], past: bool| {
        lags.iter()
            .zip(c.value.iter().zip(&c.stderr))
            .filter(|(l, _)| (**l < 0) == past)
            .map(|(_, (v, e))| v / e)
            .fold(0.0f64, |m, z| if z.abs() > m.abs() { z } else { m })
    };
    // Sign-symmetric ZHawkes: null leverage correlators.
    let spec = FeatureModel::symmetric(1.0, 0.4, 1.0, 0.1, 0.5, 0.1).to_spec().unwrap();
    let d = diagnostics_leverage_zumbach(&simulate_events(&spec, 2e5, 21).unwrap(), 10.0, 3, 10).unwrap();
    let lev = d
        .pairs
        .iter()
        .flat_map(|p| [z_max(&p.leverage, &d.lags, true), z_max(&p.leverage, &d.lags, false)])
        .fold(0.0f64, |m, z| m.max(z.abs()));
    // Trend of asset 0 drives the activity of asset 1 only.
    let mut spec = ModelSpec::poisson(vec![1.0, 1.0]);
    spec.zumbach.push(KernelEntry { target: 1, source: 0, kernel: KernelFunction::exponential(0.1f64.sqrt(), 0.1) });
    let d = diagnostics_leverage_zumbach(&simulate_events(&spec, 2e5, 22).unwrap(), 10.0, 3, 10).unwrap();
    let driven = z_max(&d.pair(1, 0).unwrap().zumbach, &d.lags, true);
    let reverse = z_max(&d.pair(0, 1).unwrap().zumbach, &d.lags, true);
    Outcome::new(
        lev < 3.0 && driven > 3.0 && reverse.abs() < 3.0,
        format!("symmetric leverage max |z| = {lev:.2}; cross-trend zumbach z: 0->1 {driven:.1}, 1->0 {reverse:.2}"),
    )
}

const CRITERIA: [Criterion; 14] = [
    Criterion { id: "1", title: "exact point alpha = 4 at n_Z = 1/2", expect: Expect::Pass, run: exact_point },
    Criterion { id: "2", title: "isotropic closed form", expect: Expect::Pass, run: isotropic },
    Criterion { id: "3", title: "small-gamma curvature", expect: Expect::Pass, run: small_gamma_curvature },
    Criterion { id: "4", title: "small-n_Z expansion", expect: Expect::Pass, run: small_nz },
    Criterion { id: "5", title: "large-n_Z profile and SDE histogram", expect: Expect::Pass, run: large_nz_profile },
    Criterion { id: "6", title: "Hill tail consistency", expect: Expect::Pass, run: tail_consistency },
    Criterion { id: "7", title: "mean intensity", expect: Expect::Pass, run: mean_rates },
    Criterion { id: "8", title: "co-jump identity", expect: Expect::Pass, run: cojump_identity },
    Criterion { id: "9", title: "Yule-Walker self-consistency", expect: Expect::Pass, run: yule_walker },
    Criterion { id: "10", title: "three-point diagonal", expect: Expect::Pass, run: three_point_diagonal },
    Criterion { id: "11", title: "stability classification", expect: Expect::Pass, run: stability },
    Criterion { id: "12", title: "positivity checker", expect: Expect::Pass, run: positivity },
    Criterion {
        id: "13",
        title: "exponent table continuity",
        expect: Expect::KnownDivergence("critical-regime rows jump at their branch boundaries as printed"),
        run: table_continuity,
    },
    Criterion { id: "D", title: "leverage/Zumbach diagnostics", expect: Expect::Pass, run: diagnostics },
];

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let out = std::panic::catch_unwind(c.run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::new(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let status = if out.pass { "PASS" } else { "FAIL" };
        let note = match (&c.expect, out.pass) {
            (Expect::KnownDivergence(why), false) if !out.detail.starts_with("panicked") => {
                format!(" [known divergence: {why}]")
            }
            (_, false) => {
                unexpected.push(c.id);
                String::new()
            }
            _ => String::new(),
        };
        println!("{status} {:>2} {}: {} ({secs:.1}s){note}", c.id, c.title, out.detail);
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria met or documented");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
