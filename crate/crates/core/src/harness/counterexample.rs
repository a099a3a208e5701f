//! Two fixed composite problems on which the simpler proximal GS rules make
//! less one-step progress than either linear-rate bound, while GS-q does not.
//!
//! Both use `f(x) = ½‖Ax − b‖²` with `A = diag(1, 0.7)`, so `L = 1`,
//! `μ = 0.49` and `μ₁ = (1 + 1/0.49)⁻¹`.

use serde::Serialize;

use crate::analysis::{mu1_diag, ConvexityConstants};
use crate::descent::{run, RunOptions, StepStrategy};
use crate::error::Result;
use crate::linalg::SparseMatrix;
use crate::problems::{LeastSquares, Problem, ScaleConvention, SeparableTerm};
use crate::rules::{RuleKind, SelectionRule};
use crate::tracker::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleName {
    GsSBoundConstrained,
    GsRL1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleCase {
    pub name: CounterexampleName,
    pub b: [f64; 2],
    pub x0: [f64; 2],
    pub term: SeparableTerm,
    /// Closed-form optimum value.
    pub f_star: f64,
    /// Rules expected to make poor progress, and ones expected to satisfy both bounds.
    pub violators: Vec<RuleKind>,
    pub satisfiers: Vec<RuleKind>,
    /// Published one-step ratios, two significant figures.
    pub expected: Vec<(RuleKind, f64)>,
}

pub const RATIO_TOLERANCE: f64 = 0.02;
pub const BOUND_TOLERANCE: f64 = 0.005;

pub fn cases() -> Vec<CounterexampleCase> {
    vec![
        CounterexampleCase {
            name: CounterexampleName::GsSBoundConstrained,
            b: [-1.0, -3.0],
            x0: [1.0, 0.1],
            term: SeparableTerm::nonneg(),
            // x* = 0, f* = ½‖b‖²
            f_star: 5.0,
            violators: vec![RuleKind::GsS],
            satisfiers: vec![RuleKind::GsR, RuleKind::GsQ],
            expected: vec![(RuleKind::GsS, 0.88), (RuleKind::GsR, 0.12), (RuleKind::GsQ, 0.12)],
        },
        CounterexampleCase {
            name: CounterexampleName::GsRL1,
            b: [2.0, -1.0],
            x0: [0.4, 0.5],
            term: SeparableTerm::Abs { weight: 1.0 },
            // x* = (1, 0): ½(1 + 1) + 1
            f_star: 2.0,
            violators: vec![RuleKind::GsR],
            satisfiers: vec![RuleKind::GsQ],
            expected: vec![(RuleKind::GsR, 0.84), (RuleKind::GsQ, 0.16)],
        },
    ]
}

pub fn case_problem(case: &CounterexampleCase) -> Result<Problem> {
    let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 0.7)])?;
    let f = LeastSquares::with_convention(a, case.b.to_vec(), 0.0, ScaleConvention::Half)?;
    Problem::composite(f, vec![case.term; 2])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleOutcome {
    pub rule: RuleKind,
    pub coord: usize,
    pub f0: f64,
    pub f1: f64,
    pub ratio: f64,
    pub expected: f64,
    pub exceeds_uniform_bound: bool,
    pub exceeds_gs_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: CounterexampleName,
    pub uniform_bound: f64,
    pub gs_bound: f64,
    pub outcomes: Vec<RuleOutcome>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub cases: Vec<CaseReport>,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.failures.is_empty())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            s.push_str(&format!(
                "{:?}: bounds 1-mu/(Ln) = {:.4}, 1-mu1/L = {:.4}\n",
                c.name, c.uniform_bound, c.gs_bound
            ));
            for o in &c.outcomes {
                s.push_str(&format!(
                    "  {:<5} coord {}  F0 {:.5}  F1 {:.5}  ratio {:.4} (expected ≈ {:.2})  above uniform bound: {}  above GS bound: {}\n",
                    o.rule.name(),
                    o.coord,
                    o.f0,
                    o.f1,
                    o.ratio,
                    o.expected,
                    o.exceeds_uniform_bound,
                    o.exceeds_gs_bound
                ));
            }
            for f in &c.failures {
                s.push_str(&format!("  FAIL {f}\n"));
            }
        }
        s.push_str(if self.passed() { "all counterexample checks passed\n" } else { "counterexample checks FAILED\n" });
        s
    }
}

/// Published bound values, two significant figures on the ratios above.
pub const UNIFORM_BOUND: f64 = 0.755;
pub const GS_BOUND: f64 = 0.671;

/// One proximal `1/L` step per rule per case, compared to both bounds.
pub fn run_counterexamples() -> Result<CounterexampleReport> {
    let lambda = [1.0, 0.49];
    let consts = ConvexityConstants::from_diagonal(&lambda, &lambda)?;
    let (l, n) = (1.0, 2.0);
    let uniform_bound = 1.0 - consts.mu / (l * n);
    let gs_bound = 1.0 - mu1_diag(&lambda)? / l;
    let opts = RunOptions {
        max_iters: Some(1),
        tol: 0.0,
        backend: Backend::Scan,
        ..RunOptions::default()
    };
    let mut reports = Vec::new();
    for case in cases() {
        let p = case_problem(&case)?;
        let mut failures = Vec::new();
        if (uniform_bound - UNIFORM_BOUND).abs() > BOUND_TOLERANCE {
            failures.push(format!("uniform bound {uniform_bound:.4} differs from {UNIFORM_BOUND}"));
        }
        if (gs_bound - GS_BOUND).abs() > BOUND_TOLERANCE {
            failures.push(format!("GS bound {gs_bound:.4} differs from {GS_BOUND}"));
        }
        let mut outcomes = Vec::new();
        for &(rule, expected) in &case.expected {
            let tr = run(&p, &mut SelectionRule::new(rule, 0), StepStrategy::Proximal, &case.x0, &opts)?;
            let (f0, f1) = (tr.records[0].objective, tr.final_objective());
            let ratio = (f1 - case.f_star) / (f0 - case.f_star);
            let o = RuleOutcome {
                rule,
                coord: tr.coords()[0],
                f0,
                f1,
                ratio,
                expected,
                exceeds_uniform_bound: ratio > uniform_bound,
                exceeds_gs_bound: ratio > gs_bound,
            };
            if (ratio - expected).abs() > RATIO_TOLERANCE {
                failures.push(format!("{rule}: ratio {ratio:.4} vs expected {expected}"));
            }
            if case.violators.contains(&rule) && !(o.exceeds_uniform_bound && o.exceeds_gs_bound) {
                failures.push(format!("{rule}: expected to exceed both bounds"));
            }
            if case.satisfiers.contains(&rule) && (o.exceeds_uniform_bound || o.exceeds_gs_bound) {
                failures.push(format!("{rule}: expected to satisfy both bounds"));
            }
            outcomes.push(o);
        }
        reports.push(CaseReport {
            name: case.name,
            uniform_bound,
            gs_bound,
            outcomes,
            failures,
        });
    }
    Ok(CounterexampleReport { cases: reports })
}
