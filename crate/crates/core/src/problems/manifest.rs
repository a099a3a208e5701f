//! JSON problem manifest.
//!
//! ```json
//! { "kind": "least_squares", "matrix": "A.mtx", "b": [1.0, 2.0],
//!   "l2": 1.0, "scale": "per_sample", "term": {"kind": "abs", "weight": 1.0} }
//! ```
//!
//! Paths are relative to the manifest's directory. `kind` is one of
//! `least_squares`, `logistic`, `graph_quadratic`, `dense_quadratic`; see
//! [`ManifestKind`] for the fields of each. `term` broadcasts one separable
//! term to every coordinate, `terms` lists them per coordinate, and `x0` is
//! an optional starting point.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DenseQuadratic, GraphQuadratic, LeastSquares, Logistic, Problem, ScaleConvention, SeparableTerm, SmoothProblem};
use crate::error::{Error, Result};
use crate::linalg::{read_matrix_market, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestKind {
    LeastSquares {
        matrix: PathBuf,
        b: Vec<f64>,
        #[serde(default)]
        l2: f64,
        scale: ScaleConvention,
    },
    Logistic {
        matrix: PathBuf,
        labels: Vec<f64>,
        #[serde(default)]
        l2: f64,
    },
    /// `graph` is a symmetric weighted adjacency matrix; `labeled` holds
    /// `[node, value]` pairs; `node_reg` is a scalar applied to every node.
    GraphQuadratic {
        graph: PathBuf,
        #[serde(default)]
        labeled: Vec<(usize, f64)>,
        #[serde(default)]
        node_reg: f64,
    },
    DenseQuadratic {
        hessian: PathBuf,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub kind: ManifestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<SeparableTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<SeparableTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn read_mtx(base: &Path, rel: &Path) -> Result<SparseMatrix> {
    let f = File::open(base.join(rel))?;
    read_matrix_market(BufReader::new(f))
}

impl Manifest {
    /// Builds the problem; matrix paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Problem> {
        let smooth: Box<dyn SmoothProblem> = match &self.kind {
            ManifestKind::LeastSquares { matrix, b, l2, scale } => {
                let a = read_mtx(base, matrix)?;
                Box::new(LeastSquares::with_convention(a, b.clone(), *l2, *scale)?)
            }
            ManifestKind::Logistic { matrix, labels, l2 } => {
                let a = read_mtx(base, matrix)?;
                Box::new(Logistic::new(a, labels.clone(), *l2)?)
            }
            ManifestKind::GraphQuadratic { graph, labeled, node_reg } => {
                let g = read_mtx(base, graph)?;
                if g.nrows() != g.ncols() {
                    return Err(Error::invalid("adjacency matrix must be square"));
                }
                let edges = symmetric_edges(&g)?;
                let reg = vec![*node_reg; g.nrows()];
                Box::new(GraphQuadratic::new(g.nrows(), &edges, labeled, &reg)?)
            }
            ManifestKind::DenseQuadratic { hessian, c } => {
                let h = read_mtx(base, hessian)?;
                Box::new(DenseQuadratic::new(h.nrows(), h.to_dense(), c.clone())?)
            }
        };
        let n = smooth.dim();
        let terms = match (&self.term, &self.terms) {
            (Some(_), Some(_)) => return Err(Error::invalid("give either `term` or `terms`, not both")),
            (Some(t), None) => Some(vec![*t; n]),
            (None, Some(ts)) => Some(ts.clone()),
            (None, None) => None,
        };
        if let Some(x0) = &self.x0 {
            super::check_dim(n, x0.len())?;
        }
        Problem::from_parts(smooth, terms)
    }
}

/// Upper-triangle edges of a symmetric adjacency matrix.
fn symmetric_edges(g: &SparseMatrix) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = Vec::new();
    for (r, c, v) in g.col_triplets() {
        if r == c {
            continue;
        }
        let (rows, vals) = g.col(r);
        let mirror = rows.binary_search(&c).ok().map(|k| vals[k]);
        if mirror != Some(v) {
            return Err(Error::invalid(format!("adjacency is not symmetric at ({r}, {c})")));
        }
        if r < c {
            edges.push((r, c, v));
        }
    }
    Ok(edges)
}

/// Reads a manifest file and builds its problem. Returns the manifest too so
/// callers can pick up `x0`.
pub fn load_manifest(path: &Path) -> Result<(Manifest, Problem)> {
    let manifest: Manifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let problem = manifest.build(base)?;
    Ok((manifest, problem))
}
