//! Strong-convexity constants, rate factors and bound evaluators.

mod chain;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use chain::{chain_max_cycle_mean, chain_rate_factors, chain_worst_case_log_sum, ChainRates};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::rules::{gs_r_index, prox_candidates, ProxStepCandidate, StepScale};

/// Largest `n` accepted by the brute-force minimizers (`3ⁿ − 1` signed supports).
pub const BRUTE_MAX_DIM: usize = 8;
const SANDWICH_SLACK: f64 = 1e-12;

fn check_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    match v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        Some(i) => Err(Error::invalid(format!("{name}[{i}] = {} must be positive", v[i]))),
        None => Ok(()),
    }
}

/// `μ₁ = (Σ 1/λᵢ)⁻¹` for `H = diag(λ)`.
pub fn mu1_diag(lambda: &[f64]) -> Result<f64> {
    check_positive("lambda", lambda)?;
    Ok(1.0 / lambda.iter().map(|l| 1.0 / l).sum::<f64>())
}

/// `μ_L = (Σ Lᵢ/λᵢ)⁻¹` for `H = diag(λ)`.
pub fn mu_l_diag(lambda: &[f64], lips: &[f64]) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("L", lips)?;
    if lambda.len() != lips.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda.len(),
            got: lips.len(),
        });
    }
    Ok(1.0 / lambda.iter().zip(lips).map(|(l, li)| li / l).sum::<f64>())
}

fn square(h: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || h.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: h.len(),
        });
    }
    let m = DMatrix::from_row_slice(n, n, h);
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of a symmetric matrix (row-major).
pub fn min_eigenvalue(h: &[f64], n: usize) -> Result<f64> {
    let m = square(h, n)?;
    Ok(m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `min zᵀHz` over `‖z‖₁ = 1` by enumerating every signed support `(S, σ)`:
/// on the face `{z_S = σ∘w, w ≥ 0, Σw = 1}` the equality-constrained
/// stationary point is `z_S ∝ H_S⁻¹σ` with value `1/(σᵀH_S⁻¹σ)`, kept when
/// its signs match `σ`. The global minimizer is the interior stationary point
/// of its own face, so the minimum over feasible candidates is exact.
pub fn mu1_brute(h: &[f64], n: usize) -> Result<f64> {
    if n > BRUTE_MAX_DIM {
        return Err(Error::invalid(format!("brute force is capped at n = {BRUTE_MAX_DIM}, got {n}")));
    }
    let m = square(h, n)?;
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let mut best = f64::INFINITY;
    // each coordinate is off, +, or −; fix the first nonzero sign to + (z and −z agree)
    let total = 3usize.pow(n as u32);
    for code in 1..total {
        let mut signs = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            signs.push(c % 3);
            c /= 3;
        }
        let support: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
        if signs[support[0]] != 1 {
            continue;
        }
        let sigma = DVector::from_iterator(support.len(), support.iter().map(|&i| if signs[i] == 1 { 1.0 } else { -1.0 }));
        let hs = m.select_rows(&support).select_columns(&support);
        let chol = hs.cholesky().expect("principal submatrix of an SPD matrix");
        let w = chol.solve(&sigma);
        let denom = sigma.dot(&w);
        let wmax = w.amax();
        if w.iter().zip(sigma.iter()).all(|(wi, si)| wi * si >= -1e-14 * wmax) {
            best = best.min(1.0 / denom);
        }
    }
    Ok(best)
}

/// `μ_L` by brute force: `μ₁` of `D⁻¹HD⁻¹` with `D = diag(√Lᵢ)`.
pub fn mu_l_brute(h: &[f64], n: usize, lips: &[f64]) -> Result<f64> {
    check_positive("L", lips)?;
    if lips.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lips.len(),
        });
    }
    let mut scaled = h.to_vec();
    for i in 0..n {
        for j in 0..n {
            scaled[i * n + j] /= (lips[i] * lips[j]).sqrt();
        }
    }
    mu1_brute(&scaled, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMethod {
    ClosedFormDiag,
    BruteForce,
    /// `μ` from the Hessian spectrum, `μ₁`, `μ_L` at their guaranteed lower
    /// bounds (`μ/n` and `max{μ/(nL̄), μ₁/L}`).
    Eigen,
    /// As `Eigen`, with `μ` supplied externally (e.g. the ℓ₂ weight).
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityConstants {
    pub mu: f64,
    pub mu1: f64,
    pub mu_l: f64,
    pub method: ConstantsMethod,
}

/// `μ/n ≤ μ₁ ≤ μ`.
pub fn check_mu1_sandwich(mu: f64, mu1: f64, n: usize) -> Result<()> {
    let lo = mu / n as f64;
    if mu1 < lo * (1.0 - SANDWICH_SLACK) || mu1 > mu * (1.0 + SANDWICH_SLACK) {
        return Err(Error::CheckFailed(format!("μ₁ = {mu1:?} outside [μ/n, μ] = [{lo:?}, {mu:?}]")));
    }
    Ok(())
}

/// `max{μ/(nL̄), μ₁/L} ≤ μ_L ≤ μ₁/minᵢLᵢ`.
pub fn check_mu_l_sandwich(mu: f64, mu1: f64, mu_l: f64, lips: &[f64]) -> Result<()> {
    let n = lips.len() as f64;
    let lbar = lips.iter().sum::<f64>() / n;
    let lmax = lips.iter().cloned().fold(0.0, f64::max);
    let lmin = lips.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = (mu / (n * lbar)).max(mu1 / lmax);
    let hi = mu1 / lmin;
    if mu_l < lo * (1.0 - SANDWICH_SLACK) || mu_l > hi * (1.0 + SANDWICH_SLACK) {
        return Err(Error::CheckFailed(format!("μ_L = {mu_l:?} outside [{lo:?}, {hi:?}]")));
    }
    Ok(())
}

impl ConvexityConstants {
    /// Checks both sandwiches before returning.
    pub fn new(mu: f64, mu1: f64, mu_l: f64, lips: &[f64], method: ConstantsMethod) -> Result<Self> {
        check_positive("L", lips)?;
        if !(mu > 0.0 && mu1 > 0.0 && mu_l > 0.0) {
            return Err(Error::invalid(format!("constants must be positive: μ = {mu}, μ₁ = {mu1}, μ_L = {mu_l}")));
        }
        check_mu1_sandwich(mu, mu1, lips.len())?;
        check_mu_l_sandwich(mu, mu1, mu_l, lips)?;
        Ok(Self { mu, mu1, mu_l, method })
    }

    pub fn from_diagonal(lambda: &[f64], lips: &[f64]) -> Result<Self> {
        let mu = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        Self::new(mu, mu1_diag(lambda)?, mu_l_diag(lambda, lips)?, lips, ConstantsMethod::ClosedFormDiag)
    }

    pub fn from_hessian_brute(h: &[f64], n: usize, lips: &[f64]) -> Result<Self> {
        let mu = min_eigenvalue(h, n)?;
        Self::new(mu, mu1_brute(h, n)?, mu_l_brute(h, n, lips)?, lips, ConstantsMethod::BruteForce)
    }

    /// Guaranteed lower bounds from `μ` alone.
    pub fn from_mu(mu: f64, lips: &[f64], method: ConstantsMethod) -> Result<Self> {
        check_positive("L", lips)?;
        let n = lips.len() as f64;
        let lbar = lips.iter().sum::<f64>() / n;
        let lmax = lips.iter().cloned().fold(0.0, f64::max);
        let mu1 = mu / n;
        let mu_l = (mu / (n * lbar)).max(mu1 / lmax);
        Self::new(mu, mu1, mu_l, lips, method)
    }

    /// Best available constants for a smooth problem: closed form for
    /// diagonal Hessians, brute force up to [`BRUTE_MAX_DIM`], spectrum-based
    /// bounds beyond, and `fallback_mu` for non-quadratics.
    pub fn for_problem(problem: &Problem, fallback_mu: Option<f64>) -> Result<Self> {
        let f = problem.f();
        let n = f.dim();
        let lips = f.lipschitz();
        match f.hessian_dense() {
            Some(h) => {
                let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || h[i * n + j] == 0.0));
                if diagonal {
                    let lambda: Vec<f64> = (0..n).map(|i| h[i * n + i]).collect();
                    Self::from_diagonal(&lambda, lips)
                } else if n <= BRUTE_MAX_DIM {
                    Self::from_hessian_brute(&h, n, lips)
                } else {
                    let mu = min_eigenvalue(&h, n)?;
                    if mu <= 0.0 {
                        return Err(Error::NotPositiveDefinite);
                    }
                    Self::from_mu(mu, lips, ConstantsMethod::Eigen)
                }
            }
            None => {
                let mu = fallback_mu
                    .ok_or_else(|| Error::Incompatible("no Hessian; supply a strong-convexity lower bound".into()))?;
                Self::from_mu(mu, lips, ConstantsMethod::LowerBound)
            }
        }
    }
}

/// One rate line: `f(xᵏ⁺¹) − f* ≤ factor·(f(xᵏ) − f*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateLine {
    pub rule: String,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub constants: ConvexityConstants,
    pub l: f64,
    pub l_bar: f64,
    pub l_min: f64,
    pub n: usize,
    pub rates: Vec<RateLine>,
}

impl RateReport {
    pub fn get(&self, rule: &str) -> Option<f64> {
        self.rates.iter().find(|r| r.rule == rule).map(|r| r.factor)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let c = &self.constants;
        let mut s = format!(
            "n = {}  L = {:.6}  L̄ = {:.6}  min Lᵢ = {:.6}\nμ = {:.6e}  μ₁ = {:.6e}  μ_L = {:.6e}  ({:?})\n",
            self.n, self.l, self.l_bar, self.l_min, c.mu, c.mu1, c.mu_l, c.method
        );
        let w = self.rates.iter().map(|r| r.rule.len()).max().unwrap_or(4).max(4);
        s.push_str(&format!("{:<w$}  factor\n", "rule"));
        for r in &self.rates {
            s.push_str(&format!("{:<w$}  {:.10}\n", r.rule, r.factor));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rule,factor\n");
        for r in &self.rates {
            s.push_str(&format!("{},{:?}\n", r.rule, r.factor));
        }
        s
    }
}

fn factor(v: f64) -> Result<f64> {
    // 0 is attainable (e.g. one coordinate with exact curvature)
    if (-1e-15..=1.0).contains(&v) {
        Ok(v.max(0.0))
    } else {
        Err(Error::CheckFailed(format!("rate factor {v:?} outside [0, 1]")))
    }
}

/// Per-iteration factors of every analysed rule; `approx_eps` adds one
/// multiplicative approximate-GS line per level.
pub fn rate_table(constants: &ConvexityConstants, lips: &[f64], approx_eps: &[f64]) -> Result<RateReport> {
    check_positive("L", lips)?;
    let n = lips.len();
    let nf = n as f64;
    let l = lips.iter().cloned().fold(0.0, f64::max);
    let l_bar = lips.iter().sum::<f64>() / nf;
    let l_min = lips.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = constants;
    let mut rates = vec![
        RateLine {
            rule: "uniform".into(),
            factor: factor(1.0 - c.mu / (l * nf))?,
        },
        RateLine {
            rule: "lipschitz".into(),
            factor: factor(1.0 - c.mu / (nf * l_bar))?,
        },
        RateLine {
            rule: "gs".into(),
            factor: factor(1.0 - c.mu1 / l)?,
        },
        RateLine {
            rule: "gsl".into(),
            factor: factor(1.0 - c.mu_l)?,
        },
    ];
    for &e in approx_eps {
        if !(0.0..1.0).contains(&e) {
            return Err(Error::invalid(format!("multiplicative error {e} outside [0, 1)")));
        }
        rates.push(RateLine {
            rule: format!("gs-approx-mult({e})"),
            factor: factor(1.0 - c.mu1 * (1.0 - e) * (1.0 - e) / l)?,
        });
    }
    Ok(RateReport {
        constants: *c,
        l,
        l_bar,
        l_min,
        n,
        rates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdditiveBound {
    /// `min` of the available variants.
    pub a_k: f64,
    pub a_k_l: f64,
    pub a_k_l1: Option<f64>,
    /// `(1 − μ₁/L)ᵏ(gap₀ + A_k)`
    pub bound: f64,
}

/// Accumulated additive-error term after `k = eps.len()` steps, where
/// `eps[i − 1]` is the error of step `i`.
pub fn additive_bound_ak(eps: &[f64], mu1: f64, l: f64, l1: Option<f64>, gap0: f64) -> Result<AdditiveBound> {
    if !(mu1 > 0.0 && l > 0.0) {
        return Err(Error::invalid(format!("μ₁ = {mu1}, L = {l}")));
    }
    if mu1 >= l {
        return Err(Error::invalid(format!("μ₁ = {mu1} ≥ L = {l}: rate factor is not positive")));
    }
    if !(gap0 >= 0.0) {
        return Err(Error::invalid(format!("gap0 = {gap0}")));
    }
    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::invalid(format!("error level {e} is negative")));
    }
    let rho = 1.0 - mu1 / l;
    let sq = gap0.sqrt();
    let (mut a_l, mut sum_e) = (0.0, 0.0);
    let mut w = 1.0;
    for &e in eps {
        w /= rho;
        a_l += w * (e * (2.0 / l).sqrt() * sq + e * e / (2.0 * l));
        sum_e += w * e;
    }
    let a_l1 = match l1 {
        Some(l1) if l1 > 0.0 => Some((2.0 * l1).sqrt() / l * sum_e * sq),
        Some(l1) => return Err(Error::invalid(format!("L₁ = {l1}"))),
        None => None,
    };
    let a_k = a_l1.map_or(a_l, |v| v.min(a_l));
    Ok(AdditiveBound {
        a_k,
        a_k_l: a_l,
        a_k_l1: a_l1,
        bound: rho.powi(eps.len() as i32) * (gap0 + a_k),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GsqCertificate {
    /// `cᵏ ≥ 0`
    pub c: f64,
    /// GS-r index defining `x₊`.
    pub r_index: usize,
    /// GS-q index.
    pub q_index: usize,
    pub candidates: Vec<ProxStepCandidate>,
}

/// `cᵏ = g(x₊) − g(x + d) + ⟨s, (x + d) − x₊⟩`, with `x₊` the GS-r step and
/// `sᵢ = −(∇ᵢf + L·dᵢ) ∈ ∂gᵢ(xᵢ + dᵢ)`; all steps use the global `L`.
pub fn gsq_certificate(problem: &Problem, x: &[f64]) -> Result<GsqCertificate> {
    if !problem.is_composite() {
        return Err(Error::Incompatible("the certificate needs a composite problem".into()));
    }
    let grad = problem.f().full_grad(x);
    let l = problem.f().max_lipschitz();
    let cands = prox_candidates(x, &grad, problem, StepScale::Global(l));
    let j = gs_r_index(&cands);
    let q = crate::rules::gs_q_index(&cands);
    let c = cands
        .iter()
        .filter(|c| c.i != j)
        .map(|c| {
            let g = problem.term(c.i);
            g.value(x[c.i]) - g.value(x[c.i] + c.d) + c.s * c.d
        })
        .sum();
    Ok(GsqCertificate {
        c,
        r_index: j,
        q_index: q,
        candidates: cands,
    })
}

/// Right-hand side of the one-step GS-q bound,
/// `min{(1 − μ/(Ln))·gap, (1 − μ₁/L)·gap + cᵏμ₁/L}`.
pub fn gsq_bound(gap: f64, c: f64, mu: f64, mu1: f64, l: f64, n: usize) -> f64 {
    let a = (1.0 - mu / (l * n as f64)) * gap;
    let b = (1.0 - mu1 / l) * gap + c * mu1 / l;
    a.min(b)
}
