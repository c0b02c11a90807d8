//! Flattened view of a specification: one intensity per counting process.

use super::{KernelFunction, ModelSpec};

/// One additive feedback term of an intensity.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    /// `∫ kernel(t-s) dN^source_s` (the time-diagonal part of the quadratic kernel).
    Activity { source: usize, kernel: KernelFunction },
    /// `∫ kernel(t-s) dP^source_s`.
    Leverage { source: usize, kernel: KernelFunction },
    /// `(∫ first.1(t-s) dP^{first.0}_s)(∫ second.1(t-u) dP^{second.0}_u)`.
    Trend { first: (usize, KernelFunction), second: (usize, KernelFunction) },
    /// `∫ kernel(t-s) ε⁰_s ε¹_s dN^c_s`, the singular cross term fed by co-jumps.
    SignActivity { kernel: KernelFunction },
}

/// A counting process: its baseline, the assets each of its jumps moves and its feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    pub baseline: f64,
    pub assets: Vec<usize>,
    pub feedback: Vec<Feedback>,
}

impl ModelSpec {
    /// Processes `0..n_assets` are the idiosyncratic jumps; with co-jumps, process
    /// `n_assets` moves both assets at once. Zero kernels are dropped.
    pub fn processes(&self) -> Vec<Process> {
        let mut out: Vec<Process> = (0..self.n_assets)
            .map(|i| Process { baseline: self.baseline[i], assets: vec![i], feedback: Vec::new() })
            .collect();
        for e in self.leverage.iter().filter(|e| !e.kernel.is_zero()) {
            out[e.target].feedback.push(Feedback::Leverage { source: e.source, kernel: e.kernel.clone() });
        }
        for e in self.hawkes.iter().filter(|e| !e.kernel.is_zero()) {
            out[e.target].feedback.push(Feedback::Activity { source: e.source, kernel: e.kernel.clone() });
        }
        for e in self.zumbach.iter().filter(|e| !e.kernel.is_zero()) {
            out[e.target]
                .feedback
                .push(Feedback::Trend { first: (e.source, e.kernel.clone()), second: (e.source, e.kernel.clone()) });
        }
        for c in &self.zumbach_cross {
            if c.own.is_zero() || c.partner.is_zero() {
                continue;
            }
            out[c.target]
                .feedback
                .push(Feedback::Trend { first: (c.target, c.own.clone()), second: (c.other, c.partner.clone()) });
        }
        if let Some(cj) = &self.cojump {
            let mut p = Process { baseline: cj.baseline, assets: (0..self.n_assets).collect(), feedback: Vec::new() };
            for e in cj.leverage.iter().filter(|e| !e.kernel.is_zero()) {
                p.feedback.push(Feedback::Leverage { source: e.source, kernel: e.kernel.clone() });
            }
            for e in cj.hawkes.iter().filter(|e| !e.kernel.is_zero()) {
                p.feedback.push(Feedback::Activity { source: e.source, kernel: e.kernel.clone() });
            }
            for e in cj.zumbach.iter().filter(|e| !e.kernel.is_zero()) {
                p.feedback.push(Feedback::Trend {
                    first: (e.source, e.kernel.clone()),
                    second: (e.source, e.kernel.clone()),
                });
            }
            if let Some(c) = &cj.cross {
                if !c.first.is_zero() && !c.second.is_zero() {
                    p.feedback.push(Feedback::Trend { first: (0, c.first.clone()), second: (1, c.second.clone()) });
                }
            }
            out.push(p);
            for e in cj.sign_activity.iter().filter(|e| !e.kernel.is_zero()) {
                out[e.process].feedback.push(Feedback::SignActivity { kernel: e.kernel.clone() });
            }
        }
        out
    }
}

impl Feedback {
    /// Every kernel used by this term.
    pub fn kernels(&self) -> Vec<&KernelFunction> {
        match self {
            Feedback::Activity { kernel, .. }
            | Feedback::Leverage { kernel, .. }
            | Feedback::SignActivity { kernel } => vec![kernel],
            Feedback::Trend { first, second } => vec![&first.1, &second.1],
        }
    }
}
