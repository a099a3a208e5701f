use super::{validate_lipschitz, PairwiseModel, SmoothProblem};
use crate::error::{Error, Result};

/// Graph label-propagation quadratic:
/// `Σ_(u,v) (w_uv/2)(x_u − x_v)² + Σ_u (ν_u/2) x_u²`, where labeled nodes are
/// clamped to their values and removed from the variable set. Edges from a
/// variable to a labeled node become that variable's node term.
#[derive(Debug, Clone)]
pub struct GraphQuadratic {
    num_graph_nodes: usize,
    var_of_node: Vec<Option<usize>>,
    node_of_var: Vec<usize>,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    incident: Vec<Vec<usize>>,
    /// per variable: Σ w to labeled neighbours, Σ w·y, Σ w·y²
    anchor: Vec<(f64, f64, f64)>,
    node_reg: Vec<f64>,
    lips: Vec<f64>,
}

impl GraphQuadratic {
    /// `edges` are undirected `(u, v, w)` over graph nodes `0..num_nodes`,
    /// `labeled` lists `(node, value)`, and `node_reg` is `ν` per graph node
    /// (or empty for none).
    pub fn new(
        num_nodes: usize,
        edges: &[(usize, usize, f64)],
        labeled: &[(usize, f64)],
        node_reg: &[f64],
    ) -> Result<Self> {
        if !node_reg.is_empty() && node_reg.len() != num_nodes {
            return Err(Error::DimensionMismatch {
                expected: num_nodes,
                got: node_reg.len(),
            });
        }
        let mut label = vec![None; num_nodes];
        for &(u, y) in labeled {
            if u >= num_nodes {
                return Err(Error::IndexOutOfRange { index: u, len: num_nodes });
            }
            if !y.is_finite() {
                return Err(Error::NonFinite(format!("label of node {u}")));
            }
            label[u] = Some(y);
        }
        let mut var_of_node = vec![None; num_nodes];
        let mut node_of_var = Vec::new();
        for u in 0..num_nodes {
            if label[u].is_none() {
                var_of_node[u] = Some(node_of_var.len());
                node_of_var.push(u);
            }
        }
        let n = node_of_var.len();
        let mut anchor = vec![(0.0, 0.0, 0.0); n];
        let mut out_edges = Vec::new();
        let mut weights = Vec::new();
        let mut incident = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::IndexOutOfRange {
                    index: u.max(v),
                    len: num_nodes,
                });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("edge ({u}, {v}) has weight {w}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self loop at {u}")));
            }
            match (var_of_node[u], var_of_node[v]) {
                (Some(a), Some(b)) => {
                    incident[a].push(out_edges.len());
                    incident[b].push(out_edges.len());
                    out_edges.push((a, b));
                    weights.push(w);
                }
                (Some(a), None) | (None, Some(a)) => {
                    let y = label[u].or(label[v]).expect("one endpoint labeled");
                    let t = &mut anchor[a];
                    t.0 += w;
                    t.1 += w * y;
                    t.2 += w * y * y;
                }
                (None, None) => {}
            }
        }
        let reg: Vec<f64> = node_of_var
            .iter()
            .map(|&u| node_reg.get(u).copied().unwrap_or(0.0))
            .collect();
        if reg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("node regularization must be finite and ≥ 0"));
        }
        let mut lips: Vec<f64> = (0..n).map(|a| anchor[a].0 + reg[a]).collect();
        for (e, &(a, b)) in out_edges.iter().enumerate() {
            lips[a] += weights[e];
            lips[b] += weights[e];
        }
        validate_lipschitz(&lips)?;
        Ok(Self {
            num_graph_nodes: num_nodes,
            var_of_node,
            node_of_var,
            edges: out_edges,
            weights,
            incident,
            anchor,
            node_reg: reg,
            lips,
        })
    }

    pub fn num_graph_nodes(&self) -> usize {
        self.num_graph_nodes
    }

    pub fn node_of_var(&self, v: usize) -> usize {
        self.node_of_var[v]
    }

    pub fn var_of_node(&self, u: usize) -> Option<usize> {
        self.var_of_node[u]
    }
}

impl SmoothProblem for GraphQuadratic {
    fn dim(&self) -> usize {
        self.node_of_var.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let nodes: f64 = (0..self.dim()).map(|i| PairwiseModel::node_value(self, i, x[i])).sum();
        let pairs: f64 = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| self.edge_value(e, x[u], x[v]))
            .sum();
        nodes + pairs
    }

    fn grad_coord(&self, x: &[f64], i: usize) -> f64 {
        let mut g = PairwiseModel::node_grad(self, i, x[i]);
        for &e in &self.incident[i] {
            let (u, v) = self.edges[e];
            let (gu, gv) = self.edge_grad(e, x[u], x[v]);
            g += if u == i { gu } else { gv };
        }
        g
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = (0..self.dim()).map(|i| PairwiseModel::node_grad(self, i, x[i])).collect();
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            let (gu, gv) = self.edge_grad(e, x[u], x[v]);
            g[u] += gu;
            g[v] += gv;
        }
        g
    }

    fn lipschitz(&self) -> &[f64] {
        &self.lips
    }

    fn lipschitz_l1(&self) -> Option<f64> {
        // PSD Hessian: off-diagonal magnitudes never exceed the diagonal.
        Some(self.max_lipschitz())
    }

    fn is_quadratic(&self) -> bool {
        true
    }

    fn hessian_dense(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = self.lips[i];
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            h[u * n + v] -= self.weights[e];
            h[v * n + u] -= self.weights[e];
        }
        Some(h)
    }

    fn pairwise_model(&self) -> Option<&dyn PairwiseModel> {
        Some(self)
    }
}

impl PairwiseModel for GraphQuadratic {
    fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn incident(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    fn node_value(&self, i: usize, xi: f64) -> f64 {
        let (w, wy, wyy) = self.anchor[i];
        0.5 * (w * xi * xi - 2.0 * wy * xi + wyy) + 0.5 * self.node_reg[i] * xi * xi
    }

    fn node_grad(&self, i: usize, xi: f64) -> f64 {
        let (w, wy, _) = self.anchor[i];
        w * xi - wy + self.node_reg[i] * xi
    }

    fn edge_value(&self, e: usize, xu: f64, xv: f64) -> f64 {
        let d = xu - xv;
        0.5 * self.weights[e] * d * d
    }

    fn edge_grad(&self, e: usize, xu: f64, xv: f64) -> (f64, f64) {
        let g = self.weights[e] * (xu - xv);
        (g, -g)
    }

    fn num_nodes(&self) -> usize {
        self.dim()
    }
}
