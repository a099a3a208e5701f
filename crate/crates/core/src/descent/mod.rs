//! Coordinate-descent drivers.

mod csv;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csv::{read_csv, write_csv, CSV_HEADER};

use crate::error::{Error, Result};
use crate::problems::{Problem, SeparableTerm};
use crate::rules::{ErrorSchedule, RuleKind, SelectionRule};
use crate::tracker::{model_decrease, prox_point, prox_step, Backend, ResidKind, Tracker, TrackerOptions, UpdateStats};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Absolute slack for an objective increase that counts as divergence.
pub const DIVERGENCE_SLACK: f64 = 1e-6;
const PROGRESS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepStrategy {
    /// `xᵢ − ∇ᵢf/L`
    ConstantGlobal,
    /// `xᵢ − ∇ᵢf/Lᵢ`
    ConstantPerCoord,
    ExactCoord,
    /// `prox_{gᵢ/L}(xᵢ − ∇ᵢf/L)`
    Proximal,
    /// `prox_{gᵢ/Lᵢ}(xᵢ − ∇ᵢf/Lᵢ)`
    ProximalPerCoord,
}

impl StepStrategy {
    pub const ALL: [StepStrategy; 5] = [
        StepStrategy::ConstantGlobal,
        StepStrategy::ConstantPerCoord,
        StepStrategy::ExactCoord,
        StepStrategy::Proximal,
        StepStrategy::ProximalPerCoord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepStrategy::ConstantGlobal => "global",
            StepStrategy::ConstantPerCoord => "per-coord",
            StepStrategy::ExactCoord => "exact",
            StepStrategy::Proximal => "prox",
            StepStrategy::ProximalPerCoord => "prox-per-coord",
        }
    }

    pub fn is_proximal(self) -> bool {
        matches!(self, StepStrategy::Proximal | StepStrategy::ProximalPerCoord)
    }

    fn per_coord(self) -> bool {
        matches!(self, StepStrategy::ConstantPerCoord | StepStrategy::ProximalPerCoord | StepStrategy::ExactCoord)
    }

    /// Natural strategy for a rule: proximal with the rule's own constant
    /// for the proximal rules, exact for MI, `1/L` otherwise.
    pub fn default_for(rule: RuleKind) -> Self {
        match rule {
            RuleKind::GslQ | RuleKind::GslR => StepStrategy::ProximalPerCoord,
            k if k.is_proximal() => StepStrategy::Proximal,
            RuleKind::Mi => StepStrategy::ExactCoord,
            RuleKind::Gsl | RuleKind::Lipschitz => StepStrategy::ConstantPerCoord,
            _ => StepStrategy::ConstantGlobal,
        }
    }
}

impl fmt::Display for StepStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StepStrategy::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown step strategy `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Defaults to `50n`.
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub backend: Backend,
    pub refresh_interval: usize,
    /// Assert the per-iteration progress bound and error out on violation.
    pub check_bounds: bool,
    /// Keep every iterate in the trace (memory `n` per iteration).
    pub record_iterates: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            tol: DEFAULT_TOL,
            backend: Backend::Heap,
            refresh_interval: TrackerOptions::default().refresh_interval,
            check_bounds: true,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Diverged,
}

/// One row of a trace. Row 0 is the initial point (`coord = None`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub objective: f64,
    pub coord: Option<usize>,
    /// `xᵢ⁺ − xᵢ`
    pub step: f64,
    /// `‖∇f‖∞`, or `‖d‖∞` for proximal strategies, after the update.
    pub resid_inf: f64,
    pub elapsed_ns: u64,
    pub stats: UpdateStats,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rule: RuleKind,
    pub strategy: StepStrategy,
    pub records: Vec<IterRecord>,
    pub status: RunStatus,
    pub x_final: Vec<f64>,
    /// `x⁰, x¹, …` when requested.
    pub iterates: Vec<Vec<f64>>,
    pub diagnostic: Option<String>,
}

impl RunTrace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().expect("initial row").objective
    }

    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// Selected coordinates, in order.
    pub fn coords(&self) -> Vec<usize> {
        self.records.iter().filter_map(|r| r.coord).collect()
    }
}

fn resid_kind(step: StepStrategy) -> ResidKind {
    match step {
        StepStrategy::Proximal => ResidKind::ProxStep { per_coord: false },
        StepStrategy::ProximalPerCoord => ResidKind::ProxStep { per_coord: true },
        _ => ResidKind::Grad,
    }
}

/// Rejects rule/step/problem triples that do not define a method.
pub fn check_compatible(problem: &Problem, rule: RuleKind, step: StepStrategy) -> Result<()> {
    let nontrivial = problem
        .terms()
        .is_some_and(|t| t.iter().any(|g| *g != SeparableTerm::Zero));
    if step.is_proximal() && !problem.is_composite() {
        return Err(Error::Incompatible(format!("step `{step}` needs a composite problem")));
    }
    if !step.is_proximal() && nontrivial {
        return Err(Error::Incompatible(format!(
            "step `{step}` ignores the non-smooth terms; use a proximal step"
        )));
    }
    if rule.is_proximal() && !step.is_proximal() {
        return Err(Error::Incompatible(format!("rule `{rule}` needs a proximal step")));
    }
    if matches!(rule, RuleKind::GsApproxMult | RuleKind::GsApproxAdd | RuleKind::Mi) && problem.is_composite() {
        return Err(Error::Incompatible(format!("rule `{rule}` is defined for smooth problems")));
    }
    if rule == RuleKind::Mi && step != StepStrategy::ExactCoord {
        return Err(Error::Incompatible("mi performs exact coordinate minimization; use step `exact`".into()));
    }
    Ok(())
}

/// Runs coordinate descent from `x0` until the residual falls to `tol`,
/// `max_iters` is reached, or the objective misbehaves.
pub fn run(
    problem: &Problem,
    rule: &mut SelectionRule,
    step: StepStrategy,
    x0: &[f64],
    opts: &RunOptions,
) -> Result<RunTrace> {
    check_compatible(problem, rule.kind(), step)?;
    if !(opts.tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance {}", opts.tol)));
    }
    rule.prepare(problem, opts.backend)?;
    let topts = TrackerOptions {
        score: rule.kind().score(),
        resid: resid_kind(step),
        backend: opts.backend,
        refresh_interval: opts.refresh_interval,
    };
    let start = Instant::now();
    let mut t = Tracker::new(problem, x0, topts)?;
    let n = problem.dim();
    let max_iters = opts.max_iters.unwrap_or(50 * n);
    let lips = problem.f().lipschitz();

    let mut records = vec![IterRecord {
        k: 0,
        objective: t.objective(),
        coord: None,
        step: 0.0,
        resid_inf: t.resid_max(),
        elapsed_ns: start.elapsed().as_nanos() as u64,
        stats: UpdateStats::default(),
    }];
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(t.x().to_vec());
    }
    let mut status = RunStatus::MaxIters;
    let mut diagnostic = None;

    for k in 1..=max_iters {
        if t.resid_max() <= opts.tol {
            status = RunStatus::Converged;
            break;
        }
        let sel = rule.select(k, &t)?;
        let i = sel.index;
        let (xi, gi) = (t.x()[i], t.grad()[i]);
        let term = t.term(i);
        let l_used = if step.per_coord() { lips[i] } else { t.l_global() };
        let new_xi = match (sel.target, step) {
            (Some(v), _) => v,
            (None, StepStrategy::ConstantGlobal | StepStrategy::ConstantPerCoord) => xi - gi / l_used,
            (None, StepStrategy::ExactCoord) => problem.f().exact_step(t.x(), i, gi, t.ax()),
            (None, _) => prox_point(xi, gi, l_used, term),
        };
        let before = t.objective();
        let stats = match t.apply_update(i, new_xi) {
            Ok(s) => s,
            Err(Error::NonFinite(what)) => {
                status = RunStatus::Diverged;
                diagnostic = Some(format!("iteration {k}: non-finite {what}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let after = t.objective();
        records.push(IterRecord {
            k,
            objective: after,
            coord: Some(i),
            step: new_xi - xi,
            resid_inf: t.resid_max(),
            elapsed_ns: start.elapsed().as_nanos() as u64,
            stats,
        });
        if opts.record_iterates {
            iterates.push(t.x().to_vec());
        }
        if !after.is_finite() || after > before + DIVERGENCE_SLACK {
            status = RunStatus::Diverged;
            diagnostic = Some(format!("iteration {k}: objective went from {before:?} to {after:?}"));
            break;
        }
        if opts.check_bounds {
            let slack = PROGRESS_SLACK * before.abs().max(1.0);
            let bound = if step.is_proximal() {
                let d = if sel.target.is_some() { new_xi - xi } else { prox_step(xi, gi, l_used, term) };
                before + model_decrease(xi, gi, l_used, term, d)
            } else {
                before - gi * gi / (2.0 * l_used)
            };
            if after > bound + slack {
                return Err(Error::BoundViolated {
                    iter: k,
                    detail: format!("objective {after:?} exceeds progress bound {bound:?}"),
                });
            }
        }
    }
    if status == RunStatus::MaxIters && t.resid_max() <= opts.tol {
        status = RunStatus::Converged;
    }
    Ok(RunTrace {
        rule: rule.kind(),
        strategy: step,
        records,
        status,
        x_final: t.x().to_vec(),
        iterates,
        diagnostic,
    })
}

/// One entry of a race.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceEntry {
    pub rule: RuleKind,
    pub step: StepStrategy,
    pub schedule: ErrorSchedule,
}

impl RaceEntry {
    pub fn new(rule: RuleKind) -> Self {
        Self {
            rule,
            step: StepStrategy::default_for(rule),
            schedule: ErrorSchedule::Constant(0.0),
        }
    }
}

/// PRNG for entry `stream` of a race: ChaCha8 seeded with `seed`, on
/// stream number `stream`.
pub fn race_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of `entries[j]`: the rule's ordinal, offset by
/// `RuleKind::ALL.len()` for each earlier entry with the same rule.
pub fn race_stream(entries: &[RaceEntry], j: usize) -> u64 {
    let rule = entries[j].rule;
    let repeats = entries[..j].iter().filter(|e| e.rule == rule).count() as u64;
    rule.ordinal() + repeats * RuleKind::ALL.len() as u64
}

/// Runs every entry from the same `x0` in parallel. Entry `j` draws from
/// [`race_rng`]`(seed, `[`race_stream`]`(entries, j))`, so a rule's stream does
/// not depend on its position in `entries`, and repeated rules stay independent.
pub fn race(problem: &Problem, entries: &[RaceEntry], x0: &[f64], opts: &RunOptions, seed: u64) -> Result<Vec<RunTrace>> {
    (0..entries.len())
        .into_par_iter()
        .map(|j| {
            let e = &entries[j];
            let rng = race_rng(seed, race_stream(entries, j));
            let mut rule = SelectionRule::with_rng(e.rule, rng).with_schedule(e.schedule.clone());
            run(problem, &mut rule, e.step, x0, opts)
        })
        .collect()
}

/// High-accuracy minimizer by cyclic coordinate descent with `1/Lᵢ`
/// (proximal) or exact steps, for reference optima `F*` on small problems.
pub fn reference_optimum(problem: &Problem, x0: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<f64>, f64)> {
    let step = if problem.is_composite() {
        StepStrategy::ProximalPerCoord
    } else {
        StepStrategy::ExactCoord
    };
    let mut rule = SelectionRule::new(RuleKind::Cyclic, 0);
    let opts = RunOptions {
        max_iters: Some(max_iters),
        tol,
        backend: Backend::Scan,
        refresh_interval: 1000,
        check_bounds: false,
        record_iterates: false,
    };
    let trace = run(problem, &mut rule, step, x0, &opts)?;
    let v = problem.value(&trace.x_final);
    Ok((trace.x_final, v))
}

#[cfg(test)]
mod tests;
