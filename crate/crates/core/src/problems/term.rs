use serde::{Deserialize, Serialize};

/// Separable non-smooth term `gᵢ` of a composite objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparableTerm {
    Zero,
    /// `weight·|x|`
    Abs { weight: f64 },
    /// Indicator of `[lo, hi]`; a missing bound is unbounded.
    Box {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    /// `coef·x`
    Linear { coef: f64 },
}

impl SeparableTerm {
    pub fn nonneg() -> Self {
        SeparableTerm::Box {
            lo: Some(0.0),
            hi: None,
        }
    }

    fn lo(&self) -> f64 {
        match *self {
            SeparableTerm::Box { lo, .. } => lo.unwrap_or(f64::NEG_INFINITY),
            _ => f64::NEG_INFINITY,
        }
    }

    fn hi(&self) -> f64 {
        match *self {
            SeparableTerm::Box { hi, .. } => hi.unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }

    /// Rejects negative weights and empty boxes.
    pub fn validate(&self) -> crate::Result<()> {
        match *self {
            SeparableTerm::Abs { weight } if !(weight >= 0.0 && weight.is_finite()) => {
                Err(crate::Error::invalid(format!("abs weight {weight} must be finite and ≥ 0")))
            }
            SeparableTerm::Box { .. } if !(self.lo() <= self.hi()) || self.lo().is_nan() => Err(
                crate::Error::invalid(format!("empty box [{}, {}]", self.lo(), self.hi())),
            ),
            SeparableTerm::Linear { coef } if !coef.is_finite() => {
                Err(crate::Error::NonFinite(format!("linear coefficient {coef}")))
            }
            _ => Ok(()),
        }
    }

    /// `gᵢ(x)`; `+∞` outside a box.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SeparableTerm::Zero => 0.0,
            SeparableTerm::Abs { weight } => weight * x.abs(),
            SeparableTerm::Box { .. } => {
                if x >= self.lo() && x <= self.hi() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SeparableTerm::Linear { coef } => coef * x,
        }
    }

    /// `argmin_x ½(x − y)² + α·g(x)`.
    pub fn prox(&self, alpha: f64, y: f64) -> f64 {
        match *self {
            SeparableTerm::Zero => y,
            SeparableTerm::Abs { weight } => {
                let t = alpha * weight;
                if y > t {
                    y - t
                } else if y < -t {
                    y + t
                } else {
                    0.0
                }
            }
            SeparableTerm::Box { .. } => y.clamp(self.lo(), self.hi()),
            SeparableTerm::Linear { coef } => y - alpha * coef,
        }
    }

    /// `min { |grad + s| : s ∈ ∂g(x) }`, the GS-s score.
    pub fn min_subgrad_magnitude(&self, x: f64, grad: f64) -> f64 {
        match *self {
            SeparableTerm::Zero => grad.abs(),
            SeparableTerm::Abs { weight } => {
                if x == 0.0 {
                    (grad.abs() - weight).max(0.0)
                } else {
                    (grad + weight * x.signum()).abs()
                }
            }
            SeparableTerm::Box { .. } => {
                let (lo, hi) = (self.lo(), self.hi());
                // at an active bound the normal cone absorbs outward-pointing gradients
                if x <= lo && x >= hi {
                    0.0
                } else if x <= lo {
                    if grad >= 0.0 {
                        0.0
                    } else {
                        -grad
                    }
                } else if x >= hi {
                    if grad <= 0.0 {
                        0.0
                    } else {
                        grad
                    }
                } else {
                    grad.abs()
                }
            }
            SeparableTerm::Linear { coef } => (grad + coef).abs(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.value(x).is_finite()
    }
}
