//! Worst-case GS+exact rates on chain graphs.
//!
//! With exact coordinate minimization a node cannot be re-selected until one
//! of its neighbours has been. On a chain the slowest admissible sequence
//! settles into alternating an adjacent pair or sweeping a consecutive
//! triple, giving the factors `ρ₂` and `ρ₃`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRates {
    pub rho2: f64,
    pub rho3: f64,
}

impl ChainRates {
    pub fn worst(&self) -> f64 {
        self.rho2.max(self.rho3)
    }
}

fn step_factors(lips: &[f64], mu1: f64) -> Result<Vec<f64>> {
    if lips.len() < 3 {
        return Err(Error::invalid(format!("chain needs at least 3 nodes, got {}", lips.len())));
    }
    let lmin = lips.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(mu1 > 0.0 && mu1 < lmin) {
        return Err(Error::invalid(format!("need 0 < μ₁ < min Lᵢ = {lmin}, got μ₁ = {mu1}")));
    }
    Ok(lips.iter().map(|l| 1.0 - mu1 / l).collect())
}

/// `ρ₂ = max √(ρᵢρᵢ₊₁)`, `ρ₃ = max ∛(ρᵢρᵢ₊₁ρᵢ₊₂)` with `ρᵢ = 1 − μ₁/Lᵢ`.
pub fn chain_rate_factors(lips: &[f64], mu1: f64) -> Result<ChainRates> {
    let r = step_factors(lips, mu1)?;
    let rho2 = r.windows(2).map(|w| (w[0] * w[1]).sqrt()).fold(0.0, f64::max);
    let rho3 = r.windows(3).map(|w| (w[0] * w[1] * w[2]).cbrt()).fold(0.0, f64::max);
    Ok(ChainRates { rho2, rho3 })
}

const CHAIN_DP_MAX: usize = 16;
/// Karp stores `(2ⁿ + 1)·2ⁿ` reals.
const KARP_MAX: usize = 10;

fn neighbours(n: usize, i: usize) -> u32 {
    let mut m = 0u32;
    if i > 0 {
        m |= 1 << (i - 1);
    }
    if i + 1 < n {
        m |= 1 << (i + 1);
    }
    m
}

/// Transition of the blocked set after selecting `i`: `i` becomes blocked
/// and its neighbours are released.
fn next_state(n: usize, blocked: u32, i: usize) -> u32 {
    (blocked | (1 << i)) & !neighbours(n, i)
}

fn check_weights(m: &[f64]) -> Result<()> {
    if m.is_empty() || m.len() > CHAIN_DP_MAX {
        return Err(Error::invalid(format!("chain length must be in 1..={CHAIN_DP_MAX}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("chain weight".into()));
    }
    Ok(())
}

/// Maximum of `Σₜ m[iₜ]` over admissible length-`k` sequences on a chain,
/// by dynamic programming over blocked-node sets.
pub fn chain_worst_case_log_sum(m: &[f64], k: usize) -> Result<f64> {
    check_weights(m)?;
    let n = m.len();
    let states = 1usize << n;
    let mut best = vec![f64::NEG_INFINITY; states];
    best[0] = 0.0;
    for _ in 0..k {
        let mut next = vec![f64::NEG_INFINITY; states];
        for (s, &v) in best.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            for (i, &w) in m.iter().enumerate() {
                if s & (1 << i) == 0 {
                    let t = next_state(n, s as u32, i) as usize;
                    next[t] = next[t].max(v + w);
                }
            }
        }
        best = next;
    }
    Ok(best.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Asymptotic per-step value `lim max Σ m[iₜ] / k`: the maximum mean cycle
/// of the blocked-set transition graph (Karp's algorithm).
pub fn chain_max_cycle_mean(m: &[f64]) -> Result<f64> {
    check_weights(m)?;
    let n = m.len();
    if n > KARP_MAX {
        return Err(Error::invalid(format!("cycle-mean oracle is capped at {KARP_MAX} nodes")));
    }
    let v = 1usize << n;
    // d[k][s]: best weight of a k-edge walk ending in s, from any start
    let mut d = vec![vec![0.0; v]];
    for k in 1..=v {
        let mut row = vec![f64::NEG_INFINITY; v];
        for (s, &prev) in d[k - 1].iter().enumerate() {
            if prev == f64::NEG_INFINITY {
                continue;
            }
            for (i, &w) in m.iter().enumerate() {
                if s & (1 << i) == 0 {
                    let t = next_state(n, s as u32, i) as usize;
                    row[t] = row[t].max(prev + w);
                }
            }
        }
        d.push(row);
    }
    let mut best = f64::NEG_INFINITY;
    for (s, &last) in d[v].iter().enumerate() {
        if last == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..v)
            .filter(|&k| d[k][s] != f64::NEG_INFINITY)
            .map(|k| (last - d[k][s]) / (v - k) as f64)
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    Ok(best)
}
