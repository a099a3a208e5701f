use serde::{Deserialize, Serialize};

use super::{check_dim, validate_lipschitz, LinearModel, SmoothProblem};
use crate::error::{Error, Result};
use crate::linalg::{dot, SparseMatrix};

/// Which constant multiplies `‖Ax − b‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConvention {
    /// `½‖Ax − b‖²`
    Half,
    /// `1/(2m)‖Ax − b‖²`, `m` the number of rows.
    PerSample,
}

impl ScaleConvention {
    pub fn factor(self, m: usize) -> f64 {
        match self {
            ScaleConvention::Half => 0.5,
            ScaleConvention::PerSample => 0.5 / m as f64,
        }
    }
}

/// `scale·‖Ax − b‖² + (λ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: SparseMatrix,
    b: Vec<f64>,
    l2: f64,
    scale: f64,
    lips: Vec<f64>,
}

impl LeastSquares {
    pub fn new(a: SparseMatrix, b: Vec<f64>, l2: f64, scale: f64) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if !(l2 >= 0.0 && l2.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("need l2 ≥ 0 and scale > 0, got {l2}, {scale}")));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("b".into()));
        }
        let lips: Vec<f64> = (0..a.ncols()).map(|j| 2.0 * scale * a.col_norm_sq(j) + l2).collect();
        validate_lipschitz(&lips)?;
        Ok(Self { a, b, l2, scale, lips })
    }

    pub fn with_convention(a: SparseMatrix, b: Vec<f64>, l2: f64, c: ScaleConvention) -> Result<Self> {
        let s = c.factor(a.nrows());
        Self::new(a, b, l2, s)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x).expect("dimension checked by caller")
    }
}

impl SmoothProblem for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ax = self.ax(x);
        let rss: f64 = ax.iter().zip(&self.b).map(|(z, b)| (z - b) * (z - b)).sum();
        self.scale * rss + 0.5 * self.l2 * dot(x, x)
    }

    fn grad_coord(&self, x: &[f64], i: usize) -> f64 {
        let ax = self.ax(x);
        let (rows, vals) = self.a.col(i);
        let s: f64 = rows.iter().zip(vals).map(|(&r, &v)| v * (ax[r] - self.b[r])).sum();
        2.0 * self.scale * s + self.l2 * x[i]
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = self
            .ax(x)
            .iter()
            .zip(&self.b)
            .map(|(z, b)| 2.0 * self.scale * (z - b))
            .collect();
        let mut g = self.a.t_mul_vec(&resid).expect("shape");
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += self.l2 * xi;
        }
        g
    }

    fn lipschitz(&self) -> &[f64] {
        &self.lips
    }

    /// For a PSD Hessian `|Hᵢⱼ| ≤ √(HᵢᵢHⱼⱼ)`, so `max |Hᵢⱼ|` is the largest
    /// diagonal entry.
    fn lipschitz_l1(&self) -> Option<f64> {
        Some(self.max_lipschitz())
    }

    fn is_quadratic(&self) -> bool {
        true
    }

    fn hessian_dense(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for r in 0..self.a.nrows() {
            let (cols, vals) = self.a.row(r);
            for (p, &i) in cols.iter().enumerate() {
                for (q, &j) in cols.iter().enumerate() {
                    h[i * n + j] += 2.0 * self.scale * vals[p] * vals[q];
                }
            }
        }
        for i in 0..n {
            h[i * n + i] += self.l2;
        }
        Some(h)
    }

    fn linear_model(&self) -> Option<&dyn LinearModel> {
        Some(self)
    }
}

impl LinearModel for LeastSquares {
    fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    fn link_value(&self, row: usize, z: f64) -> f64 {
        let r = z - self.b[row];
        self.scale * r * r
    }

    fn link_grad(&self, row: usize, z: f64) -> f64 {
        2.0 * self.scale * (z - self.b[row])
    }

    fn node_value(&self, _i: usize, xi: f64) -> f64 {
        0.5 * self.l2 * xi * xi
    }

    fn node_grad(&self, _i: usize, xi: f64) -> f64 {
        self.l2 * xi
    }

    fn has_node_terms(&self) -> bool {
        self.l2 != 0.0
    }
}
