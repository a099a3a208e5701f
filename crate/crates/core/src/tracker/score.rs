use serde::{Deserialize, Serialize};

use crate::problems::SeparableTerm;

/// Which per-coordinate quantity the tracker ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// `|∇ᵢf|`
    Gs,
    /// `|∇ᵢf| / √Lᵢ`
    Gsl,
    /// `|dᵢ|`, the proximal step length (GS-r, or GSL-r with `Lᵢ`).
    ProxStep { per_coord: bool },
    /// `−Vᵢ`, the decrease of the quadratic model (GS-q, or GSL-q with `Lᵢ`).
    ProxModel { per_coord: bool },
    /// Minimal-norm subgradient magnitude (GS-s).
    MinSubgrad,
}

/// Quantity whose ∞-norm decides convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidKind {
    Grad,
    ProxStep { per_coord: bool },
}

/// `prox_{g/l}(xᵢ − gᵢ/l)`, the proximal coordinate update.
#[inline]
pub fn prox_point(xi: f64, gi: f64, l: f64, term: SeparableTerm) -> f64 {
    term.prox(1.0 / l, xi - gi / l)
}

/// `dᵢ = prox_{g/l}(xᵢ − gᵢ/l) − xᵢ`.
#[inline]
pub fn prox_step(xi: f64, gi: f64, l: f64, term: SeparableTerm) -> f64 {
    prox_point(xi, gi, l, term) - xi
}

/// `Vᵢ = gᵢd + (l/2)d² + g(xᵢ + d) − g(xᵢ)`.
#[inline]
pub fn model_decrease(xi: f64, gi: f64, l: f64, term: SeparableTerm, d: f64) -> f64 {
    gi * d + 0.5 * l * d * d + term.value(xi + d) - term.value(xi)
}

pub(crate) fn score(kind: ScoreKind, xi: f64, gi: f64, li: f64, l: f64, term: SeparableTerm) -> f64 {
    match kind {
        ScoreKind::Gs => gi.abs(),
        ScoreKind::Gsl => gi.abs() / li.sqrt(),
        ScoreKind::ProxStep { per_coord } => {
            let lu = if per_coord { li } else { l };
            prox_step(xi, gi, lu, term).abs()
        }
        ScoreKind::ProxModel { per_coord } => {
            let lu = if per_coord { li } else { l };
            let d = prox_step(xi, gi, lu, term);
            -model_decrease(xi, gi, lu, term, d)
        }
        ScoreKind::MinSubgrad => term.min_subgrad_magnitude(xi, gi),
    }
}

pub(crate) fn resid(kind: ResidKind, xi: f64, gi: f64, li: f64, l: f64, term: SeparableTerm) -> f64 {
    match kind {
        ResidKind::Grad => gi.abs(),
        ResidKind::ProxStep { per_coord } => {
            let lu = if per_coord { li } else { l };
            prox_step(xi, gi, lu, term).abs()
        }
    }
}
