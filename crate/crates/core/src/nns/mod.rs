//! Ball tree over the signed columns `{±aᵢ}` of a matrix.
//!
//! Unnormalized, the nearest point to a residual `r` maximizes
//! `|rᵀaᵢ| − ½‖aᵢ‖²`, a GS rule biased towards short columns. Normalized,
//! it maximizes `|rᵀaᵢ|/‖aᵢ‖`, which is the GSL rule whenever `Lᵢ = γ‖aᵢ‖²`.
//! Search is exact branch-and-bound; ties go to the smallest column index.

use crate::error::{Error, Result};
use crate::linalg::{dot, SparseMatrix};

pub const DEFAULT_LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    centroid: Vec<f64>,
    radius: f64,
    kind: NodeKind,
}

/// Ball tree over `2n` dense points of dimension `m` (memory `2n·m` reals).
#[derive(Debug, Clone)]
pub struct BallTree {
    dim: usize,
    ncols: usize,
    normalized: bool,
    leaf_size: usize,
    points: Vec<f64>,
    half_norm_sq: Vec<f64>,
    col_norms: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Relative slack on pruning bounds so rounding can never discard a tie.
const PRUNE_SLACK: f64 = 1e-12;

impl BallTree {
    /// Points `0..n` are the columns, `n..2n` their negations.
    pub fn build(a: &SparseMatrix, normalized: bool, leaf_size: usize) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        if n == 0 || m == 0 {
            return Err(Error::invalid("ball tree needs a non-empty matrix"));
        }
        if leaf_size == 0 {
            return Err(Error::invalid("leaf size must be positive"));
        }
        let mut points = vec![0.0; 2 * n * m];
        let mut col_norms = Vec::with_capacity(n);
        for j in 0..n {
            let norm = a.col_norm_sq(j).sqrt();
            col_norms.push(norm);
            let s = if normalized {
                if norm == 0.0 {
                    return Err(Error::ZeroColumn(j));
                }
                1.0 / norm
            } else {
                1.0
            };
            let (rows, vals) = a.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                points[j * m + r] = v * s;
                points[(j + n) * m + r] = -v * s;
            }
        }
        let half_norm_sq = (0..2 * n)
            .map(|p| 0.5 * dot(&points[p * m..(p + 1) * m], &points[p * m..(p + 1) * m]))
            .collect();
        let mut tree = Self {
            dim: m,
            ncols: n,
            normalized,
            leaf_size,
            points,
            half_norm_sq,
            col_norms,
            order: (0..2 * n).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, 2 * n);
        Ok(tree)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn num_points(&self) -> usize {
        2 * self.ncols
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p * self.dim..(p + 1) * self.dim]
    }

    fn fold(&self, p: usize) -> usize {
        p % self.ncols
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let m = self.dim;
        let count = (end - start) as f64;
        let mut centroid = vec![0.0; m];
        for &p in &self.order[start..end] {
            for (c, v) in centroid.iter_mut().zip(self.point(p)) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= count);
        let radius = self.order[start..end]
            .iter()
            .map(|&p| dist_sq(&centroid, self.point(p)).sqrt())
            .fold(0.0, f64::max);
        let id = self.nodes.len();
        self.nodes.push(Node {
            centroid,
            radius,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= self.leaf_size {
            return id;
        }
        // widest-spread dimension, median split
        let mut best_dim = 0;
        let mut best_spread = -1.0;
        for k in 0..m {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &self.order[start..end] {
                let v = self.points[p * m + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = k;
            }
        }
        let pts = &self.points;
        self.order[start..end].sort_by(|&p, &q| {
            pts[p * m + best_dim]
                .total_cmp(&pts[q * m + best_dim])
                .then(p.cmp(&q))
        });
        let mid = start + (end - start) / 2;
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id].kind = NodeKind::Inner { left, right };
        id
    }

    /// Generic exact branch-and-bound maximizing `value(p)`; `bound(node)`
    /// must upper-bound `value` over the node's ball. Ties resolve to the
    /// smallest folded index, then the smallest point id.
    fn search(&self, value: impl Fn(usize) -> f64, bound: impl Fn(&Node) -> f64, scale: f64) -> (usize, f64) {
        let slack = PRUNE_SLACK * scale;
        let mut best: Option<(usize, f64)> = None;
        let better = |p: usize, v: f64, cur: Option<(usize, f64)>| match cur {
            None => true,
            Some((q, w)) => v > w || (v == w && (self.fold(p), p) < (self.fold(q), q)),
        };
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if let Some((_, w)) = best {
                if bound(node) + slack < w {
                    continue;
                }
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &p in &self.order[start..end] {
                        let v = value(p);
                        if better(p, v, best) {
                            best = Some((p, v));
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    // explore the more promising child first
                    let (bl, br) = (bound(&self.nodes[left]), bound(&self.nodes[right]));
                    if bl >= br {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best.expect("tree is non-empty")
    }

    /// Exact nearest point to `r`: `(point id, distance)`.
    pub fn nearest(&self, r: &[f64]) -> Result<(usize, f64)> {
        self.check_query(r)?;
        let scale = 1.0 + dot(r, r) + self.max_norm_sq();
        let (p, v) = self.search(
            |p| -dist_sq(r, self.point(p)),
            |node| {
                let gap = (dist_sq(r, &node.centroid).sqrt() - node.radius).max(0.0);
                -gap * gap
            },
            scale,
        );
        Ok((p, (-v).sqrt()))
    }

    /// Point maximizing `rᵀp − ½‖p‖²` (the same point as [`nearest`](Self::nearest),
    /// scored without the cancellation in `‖r − p‖²`).
    pub fn max_score(&self, r: &[f64]) -> Result<(usize, f64)> {
        self.check_query(r)?;
        let rr = dot(r, r);
        let scale = 1.0 + rr + self.max_norm_sq();
        Ok(self.search(
            |p| dot(r, self.point(p)) - self.half_norm_sq[p],
            |node| {
                let gap = (dist_sq(r, &node.centroid).sqrt() - node.radius).max(0.0);
                0.5 * (rr - gap * gap)
            },
            scale,
        ))
    }

    fn max_norm_sq(&self) -> f64 {
        2.0 * self.half_norm_sq.iter().cloned().fold(0.0, f64::max)
    }

    fn check_query(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("residual".into()));
        }
        Ok(())
    }

    /// Every point lies inside its node's ball and leaves respect the size cap.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|node| match node.kind {
            NodeKind::Leaf { start, end } => {
                end - start <= self.leaf_size.max(1)
                    && self.order[start..end].iter().all(|&p| {
                        dist_sq(&node.centroid, self.point(p)).sqrt() <= node.radius * (1.0 + 1e-12) + 1e-300
                    })
            }
            NodeKind::Inner { .. } => true,
        }) && self.inner_radii_cover()
    }

    fn inner_radii_cover(&self) -> bool {
        fn leaves(t: &BallTree, id: usize, out: &mut Vec<usize>) {
            match t.nodes[id].kind {
                NodeKind::Leaf { start, end } => out.extend_from_slice(&t.order[start..end]),
                NodeKind::Inner { left, right } => {
                    leaves(t, left, out);
                    leaves(t, right, out);
                }
            }
        }
        (0..self.nodes.len()).all(|id| {
            let mut pts = Vec::new();
            leaves(self, id, &mut pts);
            let node = &self.nodes[id];
            pts.iter()
                .all(|&p| dist_sq(&node.centroid, self.point(p)).sqrt() <= node.radius * (1.0 + 1e-12) + 1e-300)
        })
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Biased GS through an unnormalized index: `argmaxᵢ |rᵀaᵢ| − ½‖aᵢ‖²`.
pub fn query_gs_biased(idx: &BallTree, r: &[f64]) -> Result<usize> {
    if idx.normalized {
        return Err(Error::Incompatible("biased GS needs an unnormalized index".into()));
    }
    Ok(idx.fold(idx.max_score(r)?.0))
}

/// Exact GSL through a normalized index: `argmaxᵢ |rᵀaᵢ|/‖aᵢ‖`.
pub fn query_gsl_exact(idx: &BallTree, r: &[f64]) -> Result<usize> {
    if !idx.normalized {
        return Err(Error::Incompatible("exact GSL needs a normalized index".into()));
    }
    Ok(idx.fold(idx.max_score(r)?.0))
}

#[cfg(test)]
mod tests;
