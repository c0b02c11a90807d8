//! Decay exponents of the correlation functions for power-law kernels.
//!
//! Kernels decay as `τ^{-1-ε}` on the time diagonal and as `τ^{-2ρ}` along rays off it,
//! with `d`/`o` labelling same-asset/cross-asset entries and `x` the cross-trend kernel.
//! The two-point function decays as `τ^{-β}`, the three-point functions as `τ^{-2δ}`
//! along rays and `τ^{-β^×}` on the time diagonal. The `β` tables are held as data:
//! each row is a condition `lhs < rhs` selecting one of two formulas.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AsymptoticsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `n_H < 1`, `0 < ε < 1`.
    NonCritical,
    /// `n_H = 1`, `0 < ε < 1/2`.
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelExponents {
    pub eps_d: f64,
    pub eps_o: f64,
    pub rho_d: f64,
    pub rho_o: f64,
    pub rho_x: f64,
    pub regime: Regime,
}

/// Free parameters of [`KernelExponents`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Param {
    EpsD,
    EpsO,
    RhoD,
    RhoO,
    RhoX,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::EpsD, Param::EpsO, Param::RhoD, Param::RhoO, Param::RhoX];
}

impl KernelExponents {
    pub fn validate(&self) -> Result<(), AsymptoticsError> {
        let eps_max = match self.regime {
            Regime::NonCritical => 1.0,
            Regime::Critical => 0.5,
        };
        for (name, e) in [("eps_d", self.eps_d), ("eps_o", self.eps_o)] {
            if !(e > 0.0 && e < eps_max) {
                return Err(AsymptoticsError::InvalidInput(format!(
                    "{name} = {e} outside (0, {eps_max}) for the {:?} regime",
                    self.regime
                )));
            }
        }
        for (name, r) in [("rho_d", self.rho_d), ("rho_o", self.rho_o), ("rho_x", self.rho_x)] {
            if !(r > 0.5) || !r.is_finite() {
                return Err(AsymptoticsError::InvalidInput(format!("{name} = {r} must exceed 1/2")));
            }
        }
        Ok(())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::EpsD => self.eps_d,
            Param::EpsO => self.eps_o,
            Param::RhoD => self.rho_d,
            Param::RhoO => self.rho_o,
            Param::RhoX => self.rho_x,
        }
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        match p {
            Param::EpsD => self.eps_d = v,
            Param::EpsO => self.eps_o = v,
            Param::RhoD => self.rho_d = v,
            Param::RhoO => self.rho_o = v,
            Param::RhoX => self.rho_x = v,
        }
        self
    }

    /// Open admissible interval of `p` in this regime; `ρ` is capped at `rho_max`.
    pub fn range(&self, p: Param, rho_max: f64) -> (f64, f64) {
        match (p, self.regime) {
            (Param::EpsD | Param::EpsO, Regime::NonCritical) => (0.0, 1.0),
            (Param::EpsD | Param::EpsO, Regime::Critical) => (0.0, 0.5),
            _ => (0.5, rho_max),
        }
    }
}

/// Quantities every table entry is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Vars {
    eps_d: f64,
    eps_o: f64,
    rho_d: f64,
    rho_o: f64,
    rho_x: f64,
    delta_d: f64,
    delta_o: f64,
    delta_x: f64,
    eps: f64,
    rho: f64,
}

impl Vars {
    fn new(k: &KernelExponents) -> Self {
        let delta_d = k.rho_d;
        let delta_o = k.rho_o;
        let delta_x = k.rho_x + delta_o - 0.5;
        let rho = 0.5 * (k.rho_d + k.rho_o).min(2.0 * k.rho_o).min(2.0 * k.rho_d).min(delta_x + k.rho_x);
        Self {
            eps_d: k.eps_d,
            eps_o: k.eps_o,
            rho_d: k.rho_d,
            rho_o: k.rho_o,
            rho_x: k.rho_x,
            delta_d,
            delta_o,
            delta_x,
            eps: k.eps_d.min(k.eps_o),
            rho,
        }
    }
}

/// Exponent produced by a table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    BetaD,
    BetaO,
    /// Critical regime, where `β_d = β_o`.
    Beta,
    BetaDCross,
    BetaOCross,
}

#[derive(Clone, Copy)]
struct Formula {
    text: &'static str,
    eval: fn(&Vars) -> f64,
}

/// One table row: the first formula applies when `lhs < rhs`, the second otherwise.
#[derive(Clone, Copy)]
pub struct TableRow {
    pub exponent: Exponent,
    pub regime: Regime,
    condition: &'static str,
    lhs: fn(&Vars) -> f64,
    rhs: fn(&Vars) -> f64,
    branches: [Formula; 2],
}

impl fmt::Debug for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ({:?}) if {}", self.exponent, self.regime, self.condition)
    }
}

/// Two-point and cross three-point rows, as printed (`2ρ_2` read as `2ρ_d` in the
/// definition of `ρ`, and the second `β_o^×` condition read as the complement of the first).
pub const TABLE: [TableRow; 7] = [
    TableRow {
        exponent: Exponent::BetaD,
        regime: Regime::NonCritical,
        condition: "(3+ε_d)/4 < min(ρ_d, ρ_x+ρ_o/2+1/4)",
        lhs: |v| (3.0 + v.eps_d) / 4.0,
        rhs: |v| v.rho_d.min(v.rho_x + v.rho_o / 2.0 + 0.25),
        branches: [
            Formula { text: "1+ε_d", eval: |v| 1.0 + v.eps_d },
            Formula {
                text: "min(4ρ_x+2ρ_o-1, 4ρ_d-2)",
                eval: |v| (4.0 * v.rho_x + 2.0 * v.rho_o - 1.0).min(4.0 * v.rho_d - 2.0),
            },
        ],
    },
    TableRow {
        exponent: Exponent::BetaO,
        regime: Regime::NonCritical,
        condition: "(3+ε_o)/4 < min((ρ_d+ρ_o)/2, ρ_x+ρ_o/2+1/4)",
        lhs: |v| (3.0 + v.eps_o) / 4.0,
        rhs: |v| ((v.rho_d + v.rho_o) / 2.0).min(v.rho_x + v.rho_o / 2.0 + 0.25),
        branches: [
            Formula { text: "1+ε_o", eval: |v| 1.0 + v.eps_o },
            Formula {
                text: "min(4ρ_x+2ρ_o-1, 2(ρ_d+ρ_o)-2)",
                eval: |v| (4.0 * v.rho_x + 2.0 * v.rho_o - 1.0).min(2.0 * (v.rho_d + v.rho_o) - 2.0),
            },
        ],
    },
    TableRow {
        exponent: Exponent::Beta,
        regime: Regime::Critical,
        condition: "ρ < 3/2",
        lhs: |v| v.rho,
        rhs: |_| 1.5,
        branches: [
            Formula { text: "4ρ-2-2ε", eval: |v| 4.0 * v.rho - 2.0 - 2.0 * v.eps },
            Formula { text: "1-2ε", eval: |v| 1.0 - 2.0 * v.eps },
        ],
    },
    TableRow {
        exponent: Exponent::BetaDCross,
        regime: Regime::NonCritical,
        condition: "ρ_x < 2ρ_d-1/2",
        lhs: |v| v.rho_x,
        rhs: |v| 2.0 * v.rho_d - 0.5,
        branches: [
            Formula { text: "2ρ_x+ρ_o-1", eval: |v| 2.0 * v.rho_x + v.rho_o - 1.0 },
            Formula { text: "2ρ_d+δ_x-1", eval: |v| 2.0 * v.rho_d + v.delta_x - 1.0 },
        ],
    },
    TableRow {
        exponent: Exponent::BetaOCross,
        regime: Regime::NonCritical,
        condition: "ρ_x < 2ρ_o-1/2",
        lhs: |v| v.rho_x,
        rhs: |v| 2.0 * v.rho_o - 0.5,
        branches: [
            Formula { text: "2ρ_x+ρ_o-1", eval: |v| 2.0 * v.rho_x + v.rho_o - 1.0 },
            Formula { text: "2ρ_o+δ_x-1", eval: |v| 2.0 * v.rho_o + v.delta_x - 1.0 },
        ],
    },
    TableRow {
        exponent: Exponent::BetaDCross,
        regime: Regime::Critical,
        condition: "2/3 < min(2ρ_x+δ_o, 2ρ_d+δ_x)/3",
        lhs: |_| 2.0 / 3.0,
        rhs: |v| (2.0 * v.rho_x + v.delta_o).min(2.0 * v.rho_d + v.delta_x) / 3.0,
        branches: [
            Formula { text: "1-ε", eval: |v| 1.0 - v.eps },
            Formula {
                text: "min(2ρ_d+δ_x-ε, 2ρ_x+δ_o-ε)",
                eval: |v| (2.0 * v.rho_d + v.delta_x - v.eps).min(2.0 * v.rho_x + v.delta_o - v.eps),
            },
        ],
    },
    TableRow {
        exponent: Exponent::BetaOCross,
        regime: Regime::Critical,
        condition: "2/3 < min(2ρ_x+δ_o, 2ρ_o+δ_x)/3",
        lhs: |_| 2.0 / 3.0,
        rhs: |v| (2.0 * v.rho_x + v.delta_o).min(2.0 * v.rho_o + v.delta_x) / 3.0,
        branches: [
            Formula { text: "1-ε", eval: |v| 1.0 - v.eps },
            Formula {
                text: "min(2ρ_o+δ_x-ε, 2ρ_x+δ_o-ε)",
                eval: |v| (2.0 * v.rho_o + v.delta_x - v.eps).min(2.0 * v.rho_x + v.delta_o - v.eps),
            },
        ],
    },
];

impl TableRow {
    pub fn condition(&self) -> &'static str {
        self.condition
    }

    pub fn formula(&self, branch: usize) -> &'static str {
        self.branches[branch].text
    }

    /// `rhs - lhs`: positive on the first branch, zero on the boundary.
    pub fn margin(&self, k: &KernelExponents) -> f64 {
        let v = Vars::new(k);
        (self.rhs)(&v) - (self.lhs)(&v)
    }

    /// Value of formula `branch` at `k`, whichever branch the condition selects.
    pub fn evaluate(&self, k: &KernelExponents, branch: usize) -> f64 {
        (self.branches[branch].eval)(&Vars::new(k))
    }

    pub fn apply(&self, k: &KernelExponents) -> BranchNote {
        let margin = self.margin(k);
        let branch = if margin > 0.0 { 0 } else { 1 };
        BranchNote {
            exponent: self.exponent,
            regime: self.regime,
            condition: self.condition.to_string(),
            condition_holds: margin > 0.0,
            on_boundary: margin.abs() < 1e-12,
            formula: self.branches[branch].text.to_string(),
            value: self.evaluate(k, branch),
        }
    }

    /// Moves `p` to the boundary `lhs = rhs`, bisecting inside its admissible range.
    /// `None` when the margin does not change sign over that range.
    pub fn boundary_point(&self, k: &KernelExponents, p: Param, rho_max: f64) -> Option<KernelExponents> {
        let (lo, hi) = k.range(p, rho_max);
        let pad = 1e-9 * (hi - lo);
        let (mut a, mut b) = (lo + pad, hi - pad);
        let f = |x: f64| self.margin(&k.with(p, x));
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            return Some(k.with(p, a));
        }
        if fa * fb > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(mid) * fa > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(k.with(p, 0.5 * (a + b)))
    }

    /// `|first - second|` at a boundary point: zero when the row is continuous there.
    pub fn boundary_gap(&self, k: &KernelExponents) -> f64 {
        (self.evaluate(k, 0) - self.evaluate(k, 1)).abs()
    }
}

/// Rows applying to a regime, in report order.
pub fn rows(regime: Regime) -> impl Iterator<Item = &'static TableRow> {
    TABLE.iter().filter(move |r| r.regime == regime)
}

/// Which row and branch produced an exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchNote {
    pub exponent: Exponent,
    pub regime: Regime,
    pub condition: String,
    pub condition_holds: bool,
    pub on_boundary: bool,
    pub formula: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub input: KernelExponents,
    pub delta_d: f64,
    pub delta_o: f64,
    pub delta_x: f64,
    /// Second admissible value `2ρ_x + δ_o - 1/2`, discarded when `δ_d < δ_o` is expected.
    pub delta_d_alternative: f64,
    pub eps: f64,
    pub rho: f64,
    pub beta_d: f64,
    pub beta_o: f64,
    pub beta_d_x: f64,
    pub beta_o_x: f64,
    pub branches: Vec<BranchNote>,
    pub warnings: Vec<String>,
}

pub fn predict_exponents(inp: &KernelExponents) -> Result<ExponentReport, AsymptoticsError> {
    inp.validate()?;
    let v = Vars::new(inp);
    let branches: Vec<BranchNote> = rows(inp.regime).map(|r| r.apply(inp)).collect();
    let pick = |e: Exponent| branches.iter().find(|b| b.exponent == e).map(|b| b.value);
    let (beta_d, beta_o) = match inp.regime {
        Regime::NonCritical => (pick(Exponent::BetaD), pick(Exponent::BetaO)),
        Regime::Critical => (pick(Exponent::Beta), pick(Exponent::Beta)),
    };
    let (beta_d, beta_o) = (beta_d.unwrap_or(f64::NAN), beta_o.unwrap_or(f64::NAN));
    let mut warnings = Vec::new();
    if inp.regime == Regime::Critical {
        let bound = 1.0 - 2.0 * v.eps;
        if beta_d > bound + 1e-12 {
            warnings
                .push(format!("critical beta = {beta_d} exceeds 1-2eps = {bound}: decay faster than the 1/tau bound"));
        }
    }
    for b in branches.iter().filter(|b| b.on_boundary) {
        warnings.push(format!("{:?} sits on its branch boundary", b.exponent));
    }
    Ok(ExponentReport {
        input: *inp,
        delta_d: v.delta_d,
        delta_o: v.delta_o,
        delta_x: v.delta_x,
        delta_d_alternative: 2.0 * v.rho_x + v.delta_o - 0.5,
        eps: v.eps,
        rho: v.rho,
        beta_d,
        beta_o,
        beta_d_x: pick(Exponent::BetaDCross).unwrap_or(f64::NAN),
        beta_o_x: pick(Exponent::BetaOCross).unwrap_or(f64::NAN),
        branches,
        warnings,
    })
}

impl fmt::Display for ExponentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = &self.input;
        writeln!(f, "regime        {:?}", k.regime)?;
        writeln!(
            f,
            "input         eps_d={} eps_o={} rho_d={} rho_o={} rho_x={}",
            k.eps_d, k.eps_o, k.rho_d, k.rho_o, k.rho_x
        )?;
        writeln!(f, "eps           {:.6}", self.eps)?;
        writeln!(f, "rho           {:.6}", self.rho)?;
        writeln!(f, "delta_d       {:.6}  (alternative {:.6})", self.delta_d, self.delta_d_alternative)?;
        writeln!(f, "delta_o       {:.6}", self.delta_o)?;
        writeln!(f, "delta_x       {:.6}", self.delta_x)?;
        for (name, value) in
            [("beta_d", self.beta_d), ("beta_o", self.beta_o), ("beta_d_x", self.beta_d_x), ("beta_o_x", self.beta_o_x)]
        {
            writeln!(f, "{name:<13} {value:.6}")?;
        }
        for b in &self.branches {
            let side = if b.condition_holds { "holds" } else { "fails" };
            writeln!(f, "branch        {:?}: {} {side} -> {} = {:.6}", b.exponent, b.condition, b.formula, b.value)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning       {w}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nc(eps_d: f64, rho_d: f64, rho_o: f64, rho_x: f64) -> KernelExponents {
        KernelExponents { eps_d, eps_o: eps_d, rho_d, rho_o, rho_x, regime: Regime::NonCritical }
    }

    #[test]
    fn second_branch_of_beta_d() {
        let r = predict_exponents(&nc(0.5, 0.8, 0.9, 0.9)).unwrap();
        let b = &r.branches[0];
        assert!(!b.condition_holds);
        assert_eq!(b.formula, "min(4ρ_x+2ρ_o-1, 4ρ_d-2)");
        assert_relative_eq!(r.beta_d, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn first_branch_of_beta_d() {
        let r = predict_exponents(&nc(0.2, 2.0, 2.0, 2.0)).unwrap();
        assert_relative_eq!(r.beta_d, 1.2, epsilon = 1e-12);
        assert!(r.branches[0].condition_holds);
    }

    #[test]
    fn delta_identities() {
        let k = nc(0.3, 0.7, 0.9, 1.1);
        let r = predict_exponents(&k).unwrap();
        assert_eq!(r.delta_d, 0.7);
        assert_eq!(r.delta_o, 0.9);
        assert_relative_eq!(r.delta_x, 1.1 + 0.9 - 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.delta_d_alternative, 2.2 + 0.9 - 0.5, epsilon = 1e-15);
    }

    fn critical(eps: f64, rho_all: f64) -> KernelExponents {
        KernelExponents {
            eps_d: eps,
            eps_o: eps,
            rho_d: rho_all,
            rho_o: rho_all,
            rho_x: rho_all,
            regime: Regime::Critical,
        }
    }

    #[test]
    fn critical_rows() {
        // rho_x large enough that rho = min(rho_d, rho_o).
        let r = predict_exponents(&critical(0.1, 1.6)).unwrap();
        assert_relative_eq!(r.rho, 1.6, epsilon = 1e-12);
        assert_relative_eq!(r.beta_d, 0.8, epsilon = 1e-12);
        assert!(r.warnings.is_empty());

        let r = predict_exponents(&critical(0.2, 1.0)).unwrap();
        assert_relative_eq!(r.beta_d, 1.6, epsilon = 1e-12);
        assert_eq!(r.beta_o, r.beta_d);
        assert!(r.warnings.iter().any(|w| w.contains("exceeds")), "{:?}", r.warnings);
    }

    #[test]
    fn regime_ranges() {
        assert!(predict_exponents(&critical(0.6, 1.0)).is_err());
        assert!(predict_exponents(&nc(0.6, 1.0, 1.0, 1.0)).is_ok());
        assert!(predict_exponents(&nc(0.5, 0.5, 1.0, 1.0)).is_err());
        assert!(predict_exponents(&nc(1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn non_critical_rows_are_continuous() {
        let k = nc(0.5, 0.8, 0.9, 0.9);
        for row in rows(Regime::NonCritical) {
            for p in Param::ALL {
                if let Some(b) = row.boundary_point(&k, p, 4.0) {
                    assert!(row.margin(&b).abs() < 1e-9);
                    assert!(row.boundary_gap(&b) < 1e-8, "{row:?} along {p:?}");
                }
            }
        }
    }

    #[test]
    fn critical_beta_jumps_at_its_boundary() {
        let row = rows(Regime::Critical).next().unwrap();
        let b = critical(0.1, 1.5);
        assert_relative_eq!(row.margin(&b), 0.0, epsilon = 1e-12);
        assert_relative_eq!(row.boundary_gap(&b), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn report_text_names_branches() {
        let s = predict_exponents(&nc(0.5, 0.8, 0.9, 0.9)).unwrap().to_string();
        assert!(s.contains("beta_d        1.200000"));
        assert!(s.contains("fails -> min(4ρ_x+2ρ_o-1, 4ρ_d-2)"));
    }
}
