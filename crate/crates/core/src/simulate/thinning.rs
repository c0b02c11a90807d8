//! Ogata thinning over all counting processes of a specification.
//!
//! Every feedback term is either a decaying sum over past events or a product of two
//! such sums. Between events each term keeps its sign and decays in magnitude, so the
//! sum of the positive parts of all terms at the current time bounds the total
//! intensity until the next accepted event.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{Event, SimError};
use crate::model::{Feedback, KernelFunction, ModelSpec, Process};

/// What a decaying feature accumulates at each event.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Mark {
    /// Jumps of an asset.
    Count(usize),
    /// Signed jumps of an asset.
    Signed(usize),
    /// `ε⁰ε¹` of co-jumps.
    CoSign,
}

/// Marks carried by one accepted event of process `p`.
struct Jump<'a> {
    assets: &'a [usize],
    signs: [i8; 2],
    cojump: bool,
}

impl Mark {
    fn weight(self, jump: &Jump) -> f64 {
        match self {
            Mark::Count(a) => jump.assets.contains(&a) as u8 as f64,
            Mark::Signed(a) => jump.assets.iter().position(|x| *x == a).map_or(0.0, |k| jump.signs[k] as f64),
            Mark::CoSign => {
                if jump.cojump {
                    (jump.signs[0] * jump.signs[1]) as f64
                } else {
                    0.0
                }
            }
        }
    }
}

fn marks(f: &Feedback) -> Vec<(Mark, &KernelFunction)> {
    match f {
        Feedback::Activity { source, kernel } => vec![(Mark::Count(*source), kernel)],
        Feedback::Leverage { source, kernel } => vec![(Mark::Signed(*source), kernel)],
        Feedback::Trend { first, second } => {
            vec![(Mark::Signed(first.0), &first.1), (Mark::Signed(second.0), &second.1)]
        }
        Feedback::SignActivity { kernel } => vec![(Mark::CoSign, kernel)],
    }
}

/// Intensity evaluator shared by the exponential and general engines.
trait Intensity {
    /// Moves the state to time `t` (no events in between).
    fn advance(&mut self, t: f64);
    /// Per-process intensities at the current time, clamped at zero.
    fn rates(&self, out: &mut [f64]);
    /// Upper bound on the total intensity from now until the next event.
    fn bound(&self) -> f64;
    fn record(&mut self, t: f64, jump: &Jump);
}

/// Term of an intensity in the exponential engine: indices into the feature bank.
#[derive(Debug, Clone, Copy)]
enum Term {
    Linear { coef: f64, feature: usize },
    Product { coef: f64, first: usize, second: usize },
}

/// Exponential kernels only: each distinct `(mark, rate)` is one recursively updated
/// feature.
struct ExpEngine {
    marks: Vec<Mark>,
    rates: Vec<f64>,
    values: Vec<f64>,
    baselines: Vec<f64>,
    terms: Vec<Vec<Term>>,
    t: f64,
}

impl ExpEngine {
    fn new(processes: &[Process]) -> Option<Self> {
        let mut e = ExpEngine {
            marks: Vec::new(),
            rates: Vec::new(),
            values: Vec::new(),
            baselines: processes.iter().map(|p| p.baseline).collect(),
            terms: Vec::new(),
            t: 0.0,
        };
        for p in processes {
            let mut terms = Vec::new();
            for f in &p.feedback {
                let ms = marks(f);
                let mut idx = Vec::new();
                let mut coef = 1.0;
                for (m, k) in ms {
                    let (a, b) = k.as_exponential()?;
                    coef *= a;
                    idx.push(e.feature(m, b));
                }
                terms.push(match idx[..] {
                    [feature] => Term::Linear { coef, feature },
                    [first, second] => Term::Product { coef, first, second },
                    _ => unreachable!("feedback terms have one or two factors"),
                });
            }
            e.terms.push(terms);
        }
        Some(e)
    }

    fn feature(&mut self, m: Mark, rate: f64) -> usize {
        if let Some(i) = (0..self.marks.len()).find(|&i| self.marks[i] == m && self.rates[i] == rate) {
            return i;
        }
        self.marks.push(m);
        self.rates.push(rate);
        self.values.push(0.0);
        self.marks.len() - 1
    }

    fn term_value(&self, term: &Term) -> f64 {
        match *term {
            Term::Linear { coef, feature } => coef * self.values[feature],
            Term::Product { coef, first, second } => coef * self.values[first] * self.values[second],
        }
    }
}

impl Intensity for ExpEngine {
    fn advance(&mut self, t: f64) {
        let dt = t - self.t;
        if dt > 0.0 {
            for (v, r) in self.values.iter_mut().zip(&self.rates) {
                *v *= (-r * dt).exp();
            }
        }
        self.t = t;
    }

    fn rates(&self, out: &mut [f64]) {
        for (p, o) in out.iter_mut().enumerate() {
            let v: f64 = self.baselines[p] + self.terms[p].iter().map(|t| self.term_value(t)).sum::<f64>();
            *o = v.max(0.0);
        }
    }

    fn bound(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.baselines)
            .map(|(ts, b)| b + ts.iter().map(|t| self.term_value(t).max(0.0)).sum::<f64>())
            .sum()
    }

    fn record(&mut self, t: f64, jump: &Jump) {
        self.advance(t);
        for (v, m) in self.values.iter_mut().zip(&self.marks) {
            *v += m.weight(jump);
        }
    }
}

/// Arbitrary kernels: intensities are recomputed from the retained history.
struct HistoryEngine {
    processes: Vec<Process>,
    history: VecDeque<(f64, Vec<(Mark, f64)>)>,
    n_assets: usize,
    memory: f64,
    t: f64,
}

impl HistoryEngine {
    fn new(processes: Vec<Process>, n_assets: usize) -> Self {
        let memory = processes
            .iter()
            .flat_map(|p| p.feedback.iter().flat_map(Feedback::kernels))
            .map(|k| k.memory_horizon(1e-9))
            .fold(0.0f64, f64::max);
        HistoryEngine { processes, history: VecDeque::new(), n_assets, memory, t: 0.0 }
    }

    /// `Σ_events weight · g(t - s)` for the given mark.
    fn sum(&self, mark: Mark, g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (s, w) in &self.history {
            for (m, x) in w {
                if *m == mark {
                    acc += x * g(self.t - s);
                }
            }
        }
        acc
    }

    fn term(&self, f: &Feedback, envelope: bool) -> f64 {
        let eval = |m: Mark, k: &KernelFunction| {
            if envelope {
                self.abs_sum(m, k)
            } else {
                self.sum(m, |u| k.value(u))
            }
        };
        let ms = marks(f);
        match ms[..] {
            [(m, k)] => eval(m, k),
            [(m1, k1), (m2, k2)] => eval(m1, k1) * eval(m2, k2),
            _ => unreachable!("feedback terms have one or two factors"),
        }
    }

    fn abs_sum(&self, mark: Mark, k: &KernelFunction) -> f64 {
        let mut acc = 0.0;
        for (s, w) in &self.history {
            for (m, x) in w {
                if *m == mark {
                    acc += x.abs() * k.envelope(self.t - s);
                }
            }
        }
        acc
    }
}

impl Intensity for HistoryEngine {
    fn advance(&mut self, t: f64) {
        self.t = t;
        while let Some((s, _)) = self.history.front() {
            if t - s > self.memory {
                self.history.pop_front();
            } else {
                break;
            }
        }
    }

    fn rates(&self, out: &mut [f64]) {
        for (p, o) in self.processes.iter().zip(out.iter_mut()) {
            let v = p.baseline + p.feedback.iter().map(|f| self.term(f, false)).sum::<f64>();
            *o = v.max(0.0);
        }
    }

    fn bound(&self) -> f64 {
        // Envelopes are nonincreasing, so `Σ|w|·env(t-s)` dominates every later value.
        self.processes.iter().map(|p| p.baseline + p.feedback.iter().map(|f| self.term(f, true)).sum::<f64>()).sum()
    }

    fn record(&mut self, t: f64, jump: &Jump) {
        self.advance(t);
        let mut w = Vec::new();
        for a in 0..self.n_assets {
            let c = Mark::Count(a).weight(jump);
            if c != 0.0 {
                w.push((Mark::Count(a), c));
                w.push((Mark::Signed(a), Mark::Signed(a).weight(jump)));
            }
        }
        if jump.cojump {
            w.push((Mark::CoSign, Mark::CoSign.weight(jump)));
        }
        self.history.push_back((t, w));
    }
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Abort when the intensity bound exceeds this value.
    pub explosion_cap: f64,
    /// Abort after this many events.
    pub max_events: usize,
}

impl SimOptions {
    pub fn for_spec(spec: &ModelSpec) -> Self {
        let total: f64 = spec.baseline.iter().sum::<f64>() + spec.cojump.as_ref().map_or(0.0, |c| c.baseline);
        SimOptions { explosion_cap: 1e6 * total.max(f64::MIN_POSITIVE), max_events: usize::MAX }
    }
}

/// Runs the thinning loop; `emit` receives every accepted record in time order.
pub(crate) fn run(
    spec: &ModelSpec,
    horizon: f64,
    rng: &mut ChaCha8Rng,
    options: SimOptions,
    mut emit: impl FnMut(Event),
) -> Result<usize, SimError> {
    let processes = spec.processes();
    let rho = spec.cojump.as_ref().map_or(0.0, |c| c.rho);
    let mut engine: Box<dyn Intensity> = match ExpEngine::new(&processes) {
        Some(e) => Box::new(e),
        None => Box::new(HistoryEngine::new(processes.clone(), spec.n_assets)),
    };
    let mut rates = vec![0.0; processes.len()];
    let mut t = 0.0;
    let mut count = 0usize;
    loop {
        let bound = engine.bound();
        if !(bound <= options.explosion_cap) {
            return Err(SimError::Exploded { t, intensity: bound });
        }
        if bound <= 0.0 {
            break;
        }
        let wait: f64 = rng.sample(Exp1);
        t += wait / bound;
        if t > horizon {
            break;
        }
        engine.advance(t);
        engine.rates(&mut rates);
        let total: f64 = rates.iter().sum();
        debug_assert!(total <= bound * (1.0 + 1e-9), "bound {bound} below intensity {total}");
        let u: f64 = rng.gen::<f64>() * bound;
        if u >= total {
            continue;
        }
        // Attribute the event to a process proportionally to its intensity.
        let mut acc = 0.0;
        let mut p = rates.len() - 1;
        for (k, r) in rates.iter().enumerate() {
            acc += r;
            if u < acc {
                p = k;
                break;
            }
        }
        let proc_ = &processes[p];
        let cojump = proc_.assets.len() > 1;
        let first: i8 = if rng.gen::<bool>() { 1 } else { -1 };
        let signs = if cojump {
            let same = rng.gen::<f64>() < 0.5 * (1.0 + rho);
            [first, if same { first } else { -first }]
        } else {
            [first, 0]
        };
        for (k, &a) in proc_.assets.iter().enumerate() {
            emit(Event { t, asset: a as u8, sign: signs[k], cojump });
        }
        engine.record(t, &Jump { assets: &proc_.assets, signs, cojump });
        count += 1;
        if count >= options.max_events {
            return Err(SimError::TooManyEvents { t, count });
        }
    }
    Ok(count)
}
