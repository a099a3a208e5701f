//! Objective functions: smooth h₁ (`f(Ax)` plus node terms) and h₂ (pairwise
//! graph) families, and composite objectives with separable non-smooth terms.

mod checks;
mod graph;
mod least_squares;
mod logistic;
mod manifest;
mod quadratic;
mod term;

use std::fmt::Debug;

pub use checks::{check_coordinate_lipschitz, check_finite_differences};
pub use graph::GraphQuadratic;
pub use least_squares::{LeastSquares, ScaleConvention};
pub use logistic::Logistic;
pub use manifest::{load_manifest, Manifest, ManifestKind};
pub use quadratic::DenseQuadratic;
pub use term::SeparableTerm;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// h₁ structure: `f(x) = Σ_r φ_r((Ax)_r) + Σ_i gᵢ(xᵢ)`, so that `∇ⱼ` of the
/// row part depends only on row `j` of `Ax`.
pub trait LinearModel: Send + Sync {
    fn matrix(&self) -> &SparseMatrix;
    fn link_value(&self, row: usize, z: f64) -> f64;
    fn link_grad(&self, row: usize, z: f64) -> f64;
    fn node_value(&self, i: usize, xi: f64) -> f64;
    fn node_grad(&self, i: usize, xi: f64) -> f64;

    /// Whether any node term is non-zero (e.g. ℓ₂ regularization).
    fn has_node_terms(&self) -> bool;
}

/// h₂ structure: `f(x) = Σ_i gᵢ(xᵢ) + Σ_(u,v)∈E f_uv(x_u, x_v)`.
pub trait PairwiseModel: Send + Sync {
    fn edges(&self) -> &[(usize, usize)];
    /// Edge ids incident to node `i`.
    fn incident(&self, i: usize) -> &[usize];
    fn node_value(&self, i: usize, xi: f64) -> f64;
    fn node_grad(&self, i: usize, xi: f64) -> f64;
    fn edge_value(&self, e: usize, xu: f64, xv: f64) -> f64;
    /// `(∂f_e/∂x_u, ∂f_e/∂x_v)`.
    fn edge_grad(&self, e: usize, xu: f64, xv: f64) -> (f64, f64);

    fn max_degree(&self) -> usize {
        (0..self.num_nodes()).map(|i| self.incident(i).len()).max().unwrap_or(0)
    }

    fn num_nodes(&self) -> usize;
}

pub trait SmoothProblem: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad_coord(&self, x: &[f64], i: usize) -> f64;
    fn full_grad(&self, x: &[f64]) -> Vec<f64>;
    /// Coordinate-wise Lipschitz constants `Lᵢ`.
    fn lipschitz(&self) -> &[f64];

    fn max_lipschitz(&self) -> f64 {
        self.lipschitz().iter().cloned().fold(0.0, f64::max)
    }

    /// Lipschitz constant of `∇f` from the 1-norm to the ∞-norm, when known.
    fn lipschitz_l1(&self) -> Option<f64> {
        None
    }

    fn is_quadratic(&self) -> bool;

    /// Row-major dense Hessian, for quadratics only.
    fn hessian_dense(&self) -> Option<Vec<f64>> {
        None
    }

    /// Minimizer of `f` along coordinate `i`, returned as the new `xᵢ`.
    /// `ax` may carry a cached `Ax` for h₁ problems.
    fn exact_step(&self, x: &[f64], i: usize, grad_i: f64, ax: Option<&[f64]>) -> f64 {
        let _ = ax;
        if self.is_quadratic() {
            x[i] - grad_i / self.lipschitz()[i]
        } else {
            unreachable!("non-quadratic problems must override exact_step")
        }
    }

    fn linear_model(&self) -> Option<&dyn LinearModel> {
        None
    }

    fn pairwise_model(&self) -> Option<&dyn PairwiseModel> {
        None
    }
}

/// `exact_step` without a cache.
pub fn exact_coord_min(p: &dyn SmoothProblem, x: &[f64], i: usize) -> f64 {
    p.exact_step(x, i, p.grad_coord(x, i), None)
}

/// Smooth part plus optional separable terms, `F = f + Σ gᵢ`.
#[derive(Debug)]
pub struct Problem {
    smooth: Box<dyn SmoothProblem>,
    terms: Option<Vec<SeparableTerm>>,
}

impl Problem {
    pub fn smooth(p: impl SmoothProblem + 'static) -> Self {
        Self {
            smooth: Box::new(p),
            terms: None,
        }
    }

    pub fn composite(p: impl SmoothProblem + 'static, terms: Vec<SeparableTerm>) -> Result<Self> {
        Self::from_parts(Box::new(p), Some(terms))
    }

    pub fn from_parts(smooth: Box<dyn SmoothProblem>, terms: Option<Vec<SeparableTerm>>) -> Result<Self> {
        if let Some(t) = &terms {
            if t.len() != smooth.dim() {
                return Err(Error::DimensionMismatch {
                    expected: smooth.dim(),
                    got: t.len(),
                });
            }
            for term in t {
                term.validate()?;
            }
        }
        Ok(Self { smooth, terms })
    }

    pub fn f(&self) -> &dyn SmoothProblem {
        self.smooth.as_ref()
    }

    pub fn terms(&self) -> Option<&[SeparableTerm]> {
        self.terms.as_deref()
    }

    pub fn is_composite(&self) -> bool {
        self.terms.is_some()
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn term(&self, i: usize) -> SeparableTerm {
        self.terms.as_ref().map_or(SeparableTerm::Zero, |t| t[i])
    }

    pub fn separable_value(&self, x: &[f64]) -> f64 {
        match &self.terms {
            None => 0.0,
            Some(t) => t.iter().zip(x).map(|(g, &xi)| g.value(xi)).sum(),
        }
    }

    /// `F(x) = f(x) + Σ gᵢ(xᵢ)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.separable_value(x)
    }
}

pub(crate) fn validate_lipschitz(l: &[f64]) -> Result<()> {
    for (i, &li) in l.iter().enumerate() {
        if !(li > 0.0 && li.is_finite()) {
            return Err(Error::invalid(format!(
                "coordinate {i} has Lipschitz constant {li}; every coordinate needs positive curvature"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
