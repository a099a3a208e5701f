use serde::Serialize;

use super::generate::{gen_experiment, ExperimentSpec};
use super::reference::reference_solution;
use crate::descent::{race, RaceEntry, RunOptions, RunTrace, StepStrategy};
use crate::error::Result;
use crate::problems::Problem;
use crate::rules::{ErrorSchedule, RuleKind};

/// Relative gap `(F − F*)/(F⁰ − F*)` used for the iterations-to-target column.
pub const TARGET_REL_GAP: f64 = 1e-4;

/// Default race length, in multiples of the dimension.
pub const RACE_ITERS_PER_COORD: usize = 5;

/// Step used in experiment races: `1/Lᵢ` everywhere (proximal for composite
/// problems), exact for maximum improvement.
pub fn experiment_step(rule: RuleKind, composite: bool) -> StepStrategy {
    match (rule, composite) {
        (RuleKind::Mi, _) => StepStrategy::ExactCoord,
        (_, true) => StepStrategy::ProximalPerCoord,
        (_, false) => StepStrategy::ConstantPerCoord,
    }
}

pub fn entries_for(rules: &[RuleKind], composite: bool, step: Option<StepStrategy>, eps: f64) -> Vec<RaceEntry> {
    rules
        .iter()
        .map(|&rule| RaceEntry {
            rule,
            step: step.unwrap_or_else(|| experiment_step(rule, composite)),
            schedule: ErrorSchedule::Constant(eps),
        })
        .collect()
}

/// Traces of one race on one instance, with its reference optimum.
#[derive(Debug)]
pub struct RaceRun {
    pub seed: u64,
    pub f_star: f64,
    pub traces: Vec<RunTrace>,
}

impl RaceRun {
    pub fn final_gap(&self, j: usize) -> f64 {
        (self.traces[j].final_objective() - self.f_star).max(0.0)
    }

    /// First iteration whose relative gap is at most [`TARGET_REL_GAP`].
    pub fn iters_to_target(&self, j: usize) -> Option<usize> {
        let t = &self.traces[j];
        let g0 = t.records[0].objective - self.f_star;
        t.records
            .iter()
            .find(|r| r.objective - self.f_star <= TARGET_REL_GAP * g0)
            .map(|r| r.k)
    }
}

pub fn race_problem(
    problem: &Problem,
    x0: &[f64],
    entries: &[RaceEntry],
    opts: &RunOptions,
    seed: u64,
) -> Result<RaceRun> {
    let (_, f_star) = reference_solution(problem, x0)?;
    let traces = race(problem, entries, x0, opts, seed)?;
    Ok(RaceRun { seed, f_star, traces })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSummary {
    pub rule: RuleKind,
    pub step: StepStrategy,
    pub median_final_gap: f64,
    /// Median over seeds that reached the target; `None` if fewer than half did.
    pub median_iters_to_target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaceSummary {
    pub seeds: Vec<u64>,
    pub rules: Vec<RuleSummary>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl RaceSummary {
    pub fn from_runs(entries: &[RaceEntry], runs: &[RaceRun]) -> Self {
        let rules = entries
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let gaps: Vec<f64> = runs.iter().map(|r| r.final_gap(j)).collect();
                let mut hits: Vec<usize> = runs.iter().filter_map(|r| r.iters_to_target(j)).collect();
                hits.sort_unstable();
                let median_iters_to_target = (2 * hits.len() >= runs.len() && !hits.is_empty()).then(|| {
                    // ranks over all runs, misses counted as +∞
                    let k = (runs.len() - 1) / 2;
                    hits.get(k).copied().unwrap_or(usize::MAX)
                });
                RuleSummary {
                    rule: e.rule,
                    step: e.step,
                    median_final_gap: median(gaps),
                    median_iters_to_target: median_iters_to_target.filter(|&v| v != usize::MAX),
                }
            })
            .collect();
        Self {
            seeds: runs.iter().map(|r| r.seed).collect(),
            rules,
        }
    }

    pub fn gap(&self, rule: RuleKind) -> Option<f64> {
        self.rules.iter().find(|r| r.rule == rule).map(|r| r.median_final_gap)
    }

    /// Rules sorted by median final gap (best first).
    pub fn ranking(&self) -> Vec<&RuleSummary> {
        let mut v: Vec<&RuleSummary> = self.rules.iter().collect();
        v.sort_by(|a, b| a.median_final_gap.total_cmp(&b.median_final_gap));
        v
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} seed(s); ranking by median final gap\n", self.seeds.len());
        s.push_str(&format!("{:<4} {:<15} {:<15} {:>14} {:>12}\n", "rank", "rule", "step", "median gap", "iters@1e-4"));
        for (i, r) in self.ranking().iter().enumerate() {
            let it = r.median_iters_to_target.map_or("-".to_string(), |v| v.to_string());
            s.push_str(&format!(
                "{:<4} {:<15} {:<15} {:>14.6e} {:>12}\n",
                i + 1,
                r.rule.name(),
                r.step.name(),
                r.median_final_gap,
                it
            ));
        }
        s
    }
}

/// Races `entries` on fresh instances for each seed in `seeds`; the
/// instance seed doubles as the master PRNG seed. An unset iteration cap
/// becomes [`RACE_ITERS_PER_COORD`]`·n` per instance.
pub fn race_experiment(
    base: &ExperimentSpec,
    rules: &[RuleKind],
    step: Option<StepStrategy>,
    eps: f64,
    seeds: &[u64],
    opts: &RunOptions,
) -> Result<(Vec<RaceEntry>, Vec<RaceRun>)> {
    let mut runs = Vec::with_capacity(seeds.len());
    let mut entries = Vec::new();
    for &seed in seeds {
        let spec = ExperimentSpec { seed, ..*base };
        let exp = gen_experiment(&spec)?;
        entries = entries_for(rules, exp.problem.is_composite(), step, eps);
        let opts = RunOptions {
            max_iters: Some(opts.max_iters.unwrap_or(RACE_ITERS_PER_COORD * exp.problem.dim())),
            ..opts.clone()
        };
        runs.push(race_problem(&exp.problem, &exp.x0, &entries, &opts, seed)?);
    }
    Ok((entries, runs))
}
