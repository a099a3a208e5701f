//! Coordinate-selection rules.
//!
//! Randomized rules draw from a `ChaCha8Rng`: uniform picks
//! `⌊u·n⌋` and Lipschitz sampling inverts the cumulative `Lᵢ/ΣLⱼ`, where
//! `u ∈ [0, 1)` is `rand`'s 53-bit `f64`. Both therefore reproduce across
//! platforms for a given seed and stream.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nns::{query_gs_biased, query_gsl_exact, BallTree, DEFAULT_LEAF_SIZE};
use crate::problems::Problem;
use crate::tracker::{model_decrease, prox_step, scan_argmax, Backend, ScoreKind, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    Uniform,
    Cyclic,
    Lipschitz,
    Gs,
    Gsl,
    GsApproxMult,
    GsApproxAdd,
    Mi,
    GsS,
    GsR,
    GsQ,
    GslQ,
    GslR,
}

impl RuleKind {
    pub const ALL: [RuleKind; 13] = [
        RuleKind::Uniform,
        RuleKind::Cyclic,
        RuleKind::Lipschitz,
        RuleKind::Gs,
        RuleKind::Gsl,
        RuleKind::GsApproxMult,
        RuleKind::GsApproxAdd,
        RuleKind::Mi,
        RuleKind::GsS,
        RuleKind::GsR,
        RuleKind::GsQ,
        RuleKind::GslQ,
        RuleKind::GslR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Uniform => "uniform",
            RuleKind::Cyclic => "cyclic",
            RuleKind::Lipschitz => "lipschitz",
            RuleKind::Gs => "gs",
            RuleKind::Gsl => "gsl",
            RuleKind::GsApproxMult => "gs-approx-mult",
            RuleKind::GsApproxAdd => "gs-approx-add",
            RuleKind::Mi => "mi",
            RuleKind::GsS => "gs-s",
            RuleKind::GsR => "gs-r",
            RuleKind::GsQ => "gs-q",
            RuleKind::GslQ => "gsl-q",
            RuleKind::GslR => "gsl-r",
        }
    }

    /// Score the tracker's heap should rank for this rule.
    pub fn score(self) -> ScoreKind {
        match self {
            RuleKind::Gsl => ScoreKind::Gsl,
            RuleKind::GsS => ScoreKind::MinSubgrad,
            RuleKind::GsR => ScoreKind::ProxStep { per_coord: false },
            RuleKind::GslR => ScoreKind::ProxStep { per_coord: true },
            RuleKind::GsQ => ScoreKind::ProxModel { per_coord: false },
            RuleKind::GslQ => ScoreKind::ProxModel { per_coord: true },
            _ => ScoreKind::Gs,
        }
    }

    /// Whether the rule reads the tracker heap's arg-max directly.
    pub fn uses_score(self) -> bool {
        !matches!(
            self,
            RuleKind::Uniform
                | RuleKind::Cyclic
                | RuleKind::Lipschitz
                | RuleKind::GsApproxMult
                | RuleKind::GsApproxAdd
                | RuleKind::Mi
        )
    }

    pub fn is_proximal(self) -> bool {
        matches!(self, RuleKind::GsS | RuleKind::GsR | RuleKind::GsQ | RuleKind::GslQ | RuleKind::GslR)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, RuleKind::Uniform | RuleKind::Lipschitz)
    }

    /// Index in [`ALL`](Self::ALL); also the race stream id.
    pub fn ordinal(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u64
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown rule `{s}`")))
    }
}

/// Error levels `εₖ` for the approximate GS rules, indexed by the 1-based
/// iteration number `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ErrorSchedule {
    Constant(f64),
    /// `εₖ = scale·ratioᵏ`
    Geometric { scale: f64, ratio: f64 },
    /// `εₖ = values[k − 1]`, then the last value.
    Explicit(Vec<f64>),
}

impl ErrorSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            ErrorSchedule::Constant(e) => *e,
            ErrorSchedule::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            ErrorSchedule::Explicit(v) => v.get(k.saturating_sub(1)).or(v.last()).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, regime: ApproxRegime) -> Result<()> {
        let values: Vec<f64> = match self {
            ErrorSchedule::Constant(e) => vec![*e],
            ErrorSchedule::Geometric { scale, ratio } => {
                if !(*ratio >= 0.0 && *ratio <= 1.0) {
                    return Err(Error::invalid(format!("geometric ratio {ratio} outside [0, 1]")));
                }
                vec![*scale]
            }
            ErrorSchedule::Explicit(v) => v.clone(),
        };
        for e in values {
            regime.check(e)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxRegime {
    /// `|∇ᵢf| ≥ (1 − ε)‖∇f‖∞`, `ε ∈ [0, 1)`
    Multiplicative,
    /// `|∇ᵢf| ≥ ‖∇f‖∞ − ε`, `ε ≥ 0`
    Additive,
}

impl ApproxRegime {
    fn check(self, e: f64) -> Result<()> {
        let ok = match self {
            ApproxRegime::Multiplicative => (0.0..1.0).contains(&e),
            ApproxRegime::Additive => e >= 0.0 && e.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("error level {e} outside the {self:?} range")))
        }
    }

    pub fn threshold(self, gmax: f64, eps: f64) -> f64 {
        match self {
            ApproxRegime::Multiplicative => gmax * (1.0 - eps),
            ApproxRegime::Additive => gmax - eps,
        }
    }
}

/// GS arg-max `|gᵢ|`, smallest index on ties.
pub fn gs_index(grad: &[f64]) -> usize {
    let abs: Vec<f64> = grad.iter().map(|g| g.abs()).collect();
    scan_argmax(&abs).0
}

/// GSL arg-max `|gᵢ|/√Lᵢ`.
pub fn gsl_index(grad: &[f64], lips: &[f64]) -> usize {
    let s: Vec<f64> = grad.iter().zip(lips).map(|(g, l)| g.abs() / l.sqrt()).collect();
    scan_argmax(&s).0
}

/// Approximate GS. Adversarially returns the admissible coordinate with the
/// smallest `|gᵢ|` (largest index on ties); otherwise the exact GS index.
pub fn select_approx_gs(grad: &[f64], eps: f64, regime: ApproxRegime, adversarial: bool) -> Result<usize> {
    regime.check(eps)?;
    let exact = gs_index(grad);
    if !adversarial {
        return Ok(exact);
    }
    let gmax = grad[exact].abs();
    let t = regime.threshold(gmax, eps);
    let mut worst = exact;
    for (i, g) in grad.iter().enumerate() {
        let a = g.abs();
        if a >= t && (a < grad[worst].abs() || (a == grad[worst].abs() && i > worst)) {
            worst = i;
        }
    }
    Ok(worst)
}

/// One coordinate's proximal step data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxStepCandidate {
    pub i: usize,
    /// `dᵢ = prox_{gᵢ/L}(xᵢ − ∇ᵢf/L) − xᵢ`
    pub d: f64,
    /// `Vᵢ = ∇ᵢf·dᵢ + (L/2)dᵢ² + gᵢ(xᵢ + dᵢ) − gᵢ(xᵢ)`
    pub v: f64,
    /// `sᵢ = −(∇ᵢf + L·dᵢ) ∈ ∂gᵢ(xᵢ + dᵢ)`
    pub s: f64,
    /// Step constant used for this coordinate.
    pub l: f64,
}

/// Which constant scales the proximal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepScale {
    Global(f64),
    PerCoord,
}

pub fn prox_candidates(x: &[f64], grad: &[f64], problem: &Problem, scale: StepScale) -> Vec<ProxStepCandidate> {
    let lips = problem.f().lipschitz();
    (0..x.len())
        .map(|i| {
            let l = match scale {
                StepScale::Global(l) => l,
                StepScale::PerCoord => lips[i],
            };
            let term = problem.term(i);
            let d = prox_step(x[i], grad[i], l, term);
            ProxStepCandidate {
                i,
                d,
                v: model_decrease(x[i], grad[i], l, term, d),
                s: -(grad[i] + l * d),
                l,
            }
        })
        .collect()
}

fn argmax_by(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let v: Vec<f64> = (0..n).map(f).collect();
    scan_argmax(&v).0
}

/// GS-s: largest minimal-subgradient magnitude.
pub fn gs_s_index(x: &[f64], grad: &[f64], problem: &Problem) -> usize {
    argmax_by(x.len(), |i| problem.term(i).min_subgrad_magnitude(x[i], grad[i]))
}

/// GS-r / GSL-r: longest proximal step.
pub fn gs_r_index(c: &[ProxStepCandidate]) -> usize {
    argmax_by(c.len(), |i| c[i].d.abs())
}

/// GS-q / GSL-q: most negative model value.
pub fn gs_q_index(c: &[ProxStepCandidate]) -> usize {
    argmax_by(c.len(), |i| -c[i].v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiChoice {
    pub index: usize,
    pub new_value: f64,
    pub decrease: f64,
}

/// Maximum improvement by exhaustive exact minimization along every
/// coordinate (O(n) function evaluations). Smallest index on ties.
pub fn max_improvement_select(problem: &Problem, x: &[f64]) -> Result<MiChoice> {
    if problem.is_composite() {
        return Err(Error::Incompatible("maximum improvement is defined for smooth problems".into()));
    }
    let f = problem.f();
    let f0 = f.value(x);
    let mut best: Option<MiChoice> = None;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let new_value = f.exact_step(x, i, f.grad_coord(x, i), None);
        y[i] = new_value;
        let decrease = f0 - f.value(&y);
        y[i] = x[i];
        if best.is_none_or(|b| decrease > b.decrease) {
            best = Some(MiChoice { index: i, new_value, decrease });
        }
    }
    Ok(best.expect("n ≥ 1"))
}

fn max_improvement_tracked(t: &Tracker<'_>) -> MiChoice {
    let f = t.problem().f();
    let mut best: Option<MiChoice> = None;
    for i in 0..t.x().len() {
        let new_value = f.exact_step(t.x(), i, t.grad()[i], t.ax());
        let decrease = -t.objective_delta(i, new_value);
        if best.is_none_or(|b| decrease > b.decrease) {
            best = Some(MiChoice { index: i, new_value, decrease });
        }
    }
    best.expect("n ≥ 1")
}

/// Result of one selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Pre-computed new coordinate value (maximum improvement).
    pub target: Option<f64>,
    /// Error level used by approximate rules.
    pub eps: Option<f64>,
}

impl Selection {
    fn plain(index: usize) -> Self {
        Self {
            index,
            target: None,
            eps: None,
        }
    }
}

/// A rule plus its mutable state (PRNG, cycle position, NNS index).
#[derive(Debug, Clone)]
pub struct SelectionRule {
    kind: RuleKind,
    schedule: ErrorSchedule,
    adversarial: bool,
    rng: ChaCha8Rng,
    cdf: Vec<f64>,
    nns: Option<BallTree>,
}

impl SelectionRule {
    pub fn new(kind: RuleKind, seed: u64) -> Self {
        Self::with_rng(kind, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(kind: RuleKind, rng: ChaCha8Rng) -> Self {
        Self {
            kind,
            schedule: ErrorSchedule::Constant(0.0),
            adversarial: true,
            rng,
            cdf: Vec::new(),
            nns: None,
        }
    }

    pub fn with_schedule(mut self, schedule: ErrorSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// `false` makes the approximate rules return the exact GS index.
    pub fn with_adversarial(mut self, adversarial: bool) -> Self {
        self.adversarial = adversarial;
        self
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn schedule(&self) -> &ErrorSchedule {
        &self.schedule
    }

    /// Validates the rule against the problem and backend and builds any
    /// per-problem state (sampling CDF, ball tree).
    pub fn prepare(&mut self, problem: &Problem, backend: Backend) -> Result<()> {
        match self.kind {
            RuleKind::GsApproxMult => self.schedule.validate(ApproxRegime::Multiplicative)?,
            RuleKind::GsApproxAdd => self.schedule.validate(ApproxRegime::Additive)?,
            RuleKind::Mi if problem.is_composite() => {
                return Err(Error::Incompatible("mi needs a smooth problem".into()));
            }
            RuleKind::Lipschitz => {
                let lips = problem.f().lipschitz();
                let total: f64 = lips.iter().sum();
                let mut acc = 0.0;
                self.cdf = lips
                    .iter()
                    .map(|l| {
                        acc += l / total;
                        acc
                    })
                    .collect();
            }
            _ => {}
        }
        self.nns = None;
        if backend == Backend::Nns {
            let model = problem
                .f()
                .linear_model()
                .ok_or_else(|| Error::Incompatible("the nns backend needs an f(Ax) problem".into()))?;
            let a = model.matrix();
            match self.kind {
                RuleKind::Gs => self.nns = Some(BallTree::build(a, false, DEFAULT_LEAF_SIZE)?),
                RuleKind::Gsl => {
                    if model.has_node_terms() {
                        return Err(Error::Incompatible(
                            "exact GSL through nns needs Lᵢ = γ‖aᵢ‖², i.e. no l2 regularization".into(),
                        ));
                    }
                    self.nns = Some(BallTree::build(a, true, DEFAULT_LEAF_SIZE)?);
                }
                k => return Err(Error::Incompatible(format!("rule {k} has no nns backend"))),
            }
        }
        Ok(())
    }

    /// Selection probabilities of [`RuleKind::Lipschitz`].
    pub fn sampling_cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Draws the next coordinate for 1-based iteration `k`.
    pub fn select(&mut self, k: usize, t: &Tracker<'_>) -> Result<Selection> {
        let n = t.x().len();
        let sel = match self.kind {
            RuleKind::Uniform => {
                let u: f64 = self.rng.random();
                Selection::plain(((u * n as f64) as usize).min(n - 1))
            }
            RuleKind::Cyclic => Selection::plain((k - 1) % n),
            RuleKind::Lipschitz => {
                if self.cdf.len() != n {
                    return Err(Error::invalid("lipschitz rule used before prepare"));
                }
                let u: f64 = self.rng.random();
                let i = self.cdf.partition_point(|&c| c <= u).min(n - 1);
                Selection::plain(i)
            }
            RuleKind::GsApproxMult | RuleKind::GsApproxAdd => {
                let regime = if self.kind == RuleKind::GsApproxMult {
                    ApproxRegime::Multiplicative
                } else {
                    ApproxRegime::Additive
                };
                let eps = self.schedule.at(k);
                Selection {
                    index: select_approx_gs(t.grad(), eps, regime, self.adversarial)?,
                    target: None,
                    eps: Some(eps),
                }
            }
            RuleKind::Mi => {
                let c = max_improvement_tracked(t);
                Selection {
                    index: c.index,
                    target: Some(c.new_value),
                    eps: None,
                }
            }
            RuleKind::Gs | RuleKind::Gsl if self.nns.is_some() => {
                let idx = self.nns.as_ref().expect("checked");
                let r = t
                    .link_residual()
                    .ok_or_else(|| Error::Incompatible("nns backend needs an f(Ax) tracker".into()))?;
                let i = if self.kind == RuleKind::Gs {
                    query_gs_biased(idx, r)?
                } else {
                    query_gsl_exact(idx, r)?
                };
                Selection::plain(i)
            }
            _ => Selection::plain(t.peek().0),
        };
        Ok(sel)
    }
}

#[cfg(test)]
mod tests;
