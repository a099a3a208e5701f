use super::{check_dim, validate_lipschitz, PairwiseModel, SmoothProblem};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// `½xᵀHx + cᵀx + offset` with a dense symmetric `H`.
///
/// Viewed as an h₂ problem: each nonzero off-diagonal pair `{u, v}` is an
/// edge `H_uv·x_u·x_v`, and the diagonal plus `c` are node terms.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    n: usize,
    h: Vec<f64>,
    c: Vec<f64>,
    offset: f64,
    lips: Vec<f64>,
    edges: Vec<(usize, usize)>,
    edge_w: Vec<f64>,
    incident: Vec<Vec<usize>>,
}

impl DenseQuadratic {
    /// `h` row-major `n×n`; must be symmetric with a positive diagonal.
    pub fn new(n: usize, h: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        check_dim(n * n, h.len())?;
        check_dim(n, c.len())?;
        if h.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if h[i * n + j] != h[j * n + i] {
                    return Err(Error::invalid(format!("H is not symmetric at ({i}, {j})")));
                }
            }
        }
        let lips: Vec<f64> = (0..n).map(|i| h[i * n + i]).collect();
        validate_lipschitz(&lips)?;
        let mut edges = Vec::new();
        let mut edge_w = Vec::new();
        let mut incident = vec![Vec::new(); n];
        for u in 0..n {
            for v in u + 1..n {
                let w = h[u * n + v];
                if w != 0.0 {
                    incident[u].push(edges.len());
                    incident[v].push(edges.len());
                    edges.push((u, v));
                    edge_w.push(w);
                }
            }
        }
        Ok(Self {
            n,
            h,
            c,
            offset: 0.0,
            lips,
            edges,
            edge_w,
            incident,
        })
    }

    /// `½ Σ λᵢ (xᵢ − x*ᵢ)²`, so `f* = 0` at `x*`.
    pub fn diagonal(lambda: &[f64], xstar: &[f64]) -> Result<Self> {
        check_dim(lambda.len(), xstar.len())?;
        let n = lambda.len();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = lambda[i];
        }
        let c = lambda.iter().zip(xstar).map(|(l, s)| -l * s).collect();
        let mut q = Self::new(n, h, c)?;
        q.offset = 0.5 * lambda.iter().zip(xstar).map(|(l, s)| l * s * s).sum::<f64>();
        Ok(q)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    fn hx(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.h[i * self.n..(i + 1) * self.n], x)).collect()
    }
}

impl SmoothProblem for DenseQuadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.hx(x)) + dot(&self.c, x) + self.offset
    }

    fn grad_coord(&self, x: &[f64], i: usize) -> f64 {
        dot(&self.h[i * self.n..(i + 1) * self.n], x) + self.c[i]
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.hx(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi += ci;
        }
        g
    }

    fn lipschitz(&self) -> &[f64] {
        &self.lips
    }

    fn lipschitz_l1(&self) -> Option<f64> {
        Some(self.h.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn is_quadratic(&self) -> bool {
        true
    }

    fn hessian_dense(&self) -> Option<Vec<f64>> {
        Some(self.h.clone())
    }

    fn pairwise_model(&self) -> Option<&dyn PairwiseModel> {
        Some(self)
    }
}

impl PairwiseModel for DenseQuadratic {
    fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn incident(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    fn node_value(&self, i: usize, xi: f64) -> f64 {
        0.5 * self.lips[i] * xi * xi + self.c[i] * xi
    }

    fn node_grad(&self, i: usize, xi: f64) -> f64 {
        self.lips[i] * xi + self.c[i]
    }

    fn edge_value(&self, e: usize, xu: f64, xv: f64) -> f64 {
        self.edge_w[e] * xu * xv
    }

    fn edge_grad(&self, e: usize, xu: f64, xv: f64) -> (f64, f64) {
        (self.edge_w[e] * xv, self.edge_w[e] * xu)
    }

    fn num_nodes(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::exact_coord_min;

    #[test]
    fn separable_exact_step_zeroes_coordinate() {
        let q = DenseQuadratic::diagonal(&[1.0, 0.49], &[0.0, 0.0]).unwrap();
        assert_eq!(exact_coord_min(&q, &[1.0, 1.0], 0), 0.0);
        assert!(q.edges().is_empty());
        assert_eq!(q.value(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn pairwise_decomposition_matches_value() {
        let h = vec![2.0, -0.5, 0.0, -0.5, 3.0, 1.0, 0.0, 1.0, 4.0];
        let q = DenseQuadratic::new(3, h, vec![0.1, -0.2, 0.3]).unwrap();
        assert_eq!(q.edges(), &[(0, 1), (1, 2)]);
        let x = [0.3, -1.2, 2.0];
        let nodes: f64 = (0..3).map(|i| q.node_value(i, x[i])).sum();
        let pairs: f64 = q
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| q.edge_value(e, x[u], x[v]))
            .sum();
        assert!((nodes + pairs - q.value(&x)).abs() < 1e-14);
        assert_eq!(q.max_degree(), 2);
    }

    #[test]
    fn rejects_asymmetric_or_flat() {
        assert!(DenseQuadratic::new(2, vec![1.0, 0.5, 0.4, 1.0], vec![0.0; 2]).is_err());
        assert!(DenseQuadratic::new(2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 2]).is_err());
    }
}
