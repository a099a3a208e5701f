//! Synthetic experiment instances.
//!
//! Every draw comes from one `ChaCha8Rng` seeded with `seed_from_u64(seed)`;
//! normals are `rand_distr::StandardNormal` (ziggurat). Sparse matrices are
//! drawn column by column: scale `sⱼ = 10|N(0,1)|`, then for each row an entry
//! `(N(0,1) + 1)·sⱼ` kept with probability `min(1, 10·ln(n)/n)`. A column the
//! mask leaves empty keeps one uniformly chosen row. Then `x̂ ~ N(0, I)`,
//! followed by the noise or label flips.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{write_matrix_market, MarketSymmetry, SparseMatrix};
use crate::problems::{
    GraphQuadratic, LeastSquares, Logistic, Manifest, ManifestKind, Problem, ScaleConvention, SeparableTerm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SparseLs,
    SparseLogistic,
    DenseOverdetLs,
    L1UnderdetLs,
    TwoMoons,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SparseLs,
        ExperimentKind::SparseLogistic,
        ExperimentKind::DenseOverdetLs,
        ExperimentKind::L1UnderdetLs,
        ExperimentKind::TwoMoons,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SparseLs => "sparse_ls",
            ExperimentKind::SparseLogistic => "sparse_logistic",
            ExperimentKind::DenseOverdetLs => "dense_overdet_ls",
            ExperimentKind::L1UnderdetLs => "l1_underdet_ls",
            ExperimentKind::TwoMoons => "two_moons",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment `{s}`")))
    }
}

/// `m` is rows (samples); `n` is columns, or points for two moons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub lambda: f64,
}

pub const TWO_MOONS_NEIGHBOURS: usize = 5;
pub const TWO_MOONS_LABELS: usize = 5;
pub const TWO_MOONS_NOISE: f64 = 0.1;
pub const LABEL_FLIP_PROB: f64 = 0.1;

impl ExperimentSpec {
    /// Full-size instance.
    pub fn full(kind: ExperimentKind, seed: u64) -> Self {
        let (m, n, lambda) = match kind {
            ExperimentKind::SparseLs | ExperimentKind::SparseLogistic => (1000, 1000, 1.0),
            ExperimentKind::DenseOverdetLs => (1000, 100, 0.0),
            ExperimentKind::L1UnderdetLs => (1000, 10_000, 1.0),
            ExperimentKind::TwoMoons => (0, 500, 0.0),
        };
        Self { kind, m, n, seed, lambda }
    }

    /// Scaled-down instance (`n ≤ 500`) with the same structure.
    pub fn desk(kind: ExperimentKind, seed: u64) -> Self {
        let (m, n) = match kind {
            ExperimentKind::SparseLs | ExperimentKind::SparseLogistic => (200, 200),
            ExperimentKind::DenseOverdetLs => (400, 40),
            ExperimentKind::L1UnderdetLs => (100, 400),
            ExperimentKind::TwoMoons => (0, 200),
        };
        Self {
            m,
            n,
            ..Self::full(kind, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        let need_rows = self.kind != ExperimentKind::TwoMoons;
        if self.n == 0 || (need_rows && self.m == 0) {
            return Err(Error::invalid(format!("{}: m = {}, n = {} must be positive", self.kind, self.m, self.n)));
        }
        if self.kind == ExperimentKind::TwoMoons && self.n <= TWO_MOONS_NEIGHBOURS.max(TWO_MOONS_LABELS) {
            return Err(Error::invalid(format!("two_moons needs more than {TWO_MOONS_NEIGHBOURS} points")));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda = {}", self.lambda)));
        }
        if self.kind == ExperimentKind::L1UnderdetLs && self.lambda == 0.0 {
            return Err(Error::invalid("l1_underdet_ls needs lambda > 0"));
        }
        Ok(())
    }
}

/// Raw generated data, enough to rebuild the problem or write it to disk.
#[derive(Debug, Clone)]
pub enum ExperimentData {
    Regression { a: SparseMatrix, b: Vec<f64> },
    Classification { a: SparseMatrix, labels: Vec<f64>, flipped: usize },
    Graph { points: Vec<[f64; 2]>, moon: Vec<u8>, edges: Vec<(usize, usize, f64)>, labeled: Vec<(usize, f64)> },
}

#[derive(Debug)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub data: ExperimentData,
    pub problem: Problem,
    pub x0: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sparsity_level(n: usize) -> f64 {
    (10.0 * (n as f64).ln() / n as f64).clamp(0.0, 1.0)
}

/// Column-scaled `(N(0,1) + 1)` matrix, masked with probability `keep`.
pub fn scaled_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, keep: f64) -> Result<SparseMatrix> {
    let mut t = Vec::new();
    for j in 0..n {
        let s = 10.0 * normal(rng).abs();
        let before = t.len();
        for i in 0..m {
            let v = (normal(rng) + 1.0) * s;
            if rng.random::<f64>() < keep && v != 0.0 {
                t.push((i, j, v));
            }
        }
        if t.len() == before {
            let i = rng.random_range(0..m);
            let mut v = (normal(rng) + 1.0) * s;
            if v == 0.0 {
                v = s.max(1.0);
            }
            t.push((i, j, v));
        }
    }
    SparseMatrix::from_triplets(m, n, t)
}

fn regression(rng: &mut ChaCha8Rng, a: &SparseMatrix) -> Result<Vec<f64>> {
    let xhat: Vec<f64> = (0..a.ncols()).map(|_| normal(rng)).collect();
    let mut b = a.mul_vec(&xhat)?;
    for v in &mut b {
        *v += normal(rng);
    }
    Ok(b)
}

/// Two interleaved half circles of radius 1 (the second shifted by
/// `(1, −0.5)` and flipped), with isotropic `N(0, σ²)` noise.
pub fn two_moons_points(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> (Vec<[f64; 2]>, Vec<u8>) {
    let mut pts = Vec::with_capacity(n);
    let mut moon = Vec::with_capacity(n);
    for i in 0..n {
        let t = std::f64::consts::PI * rng.random::<f64>();
        let (x, y) = if i % 2 == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        pts.push([x + noise * normal(rng), y + noise * normal(rng)]);
        moon.push((i % 2) as u8);
    }
    (pts, moon)
}

/// Symmetrized k-nearest-neighbour graph with unit weights (brute force,
/// ties to the smaller index).
pub fn knn_graph(points: &[[f64; 2]], k: usize) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut adj = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let (dx, dy) = (points[i][0] - points[j][0], points[i][1] - points[j][1]);
                (dx * dx + dy * dy, j)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in d.iter().take(k) {
            adj.insert((i.min(j), i.max(j)));
        }
    }
    adj.into_iter().map(|(u, v)| (u, v, 1.0)).collect()
}

/// Draws an instance per the module docs.
pub fn gen_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (m, n) = (spec.m, spec.n);
    let data = match spec.kind {
        ExperimentKind::SparseLs | ExperimentKind::L1UnderdetLs => {
            let a = scaled_matrix(&mut rng, m, n, sparsity_level(n))?;
            let b = regression(&mut rng, &a)?;
            ExperimentData::Regression { a, b }
        }
        ExperimentKind::DenseOverdetLs => {
            let a = scaled_matrix(&mut rng, m, n, 1.0)?;
            let b = regression(&mut rng, &a)?;
            ExperimentData::Regression { a, b }
        }
        ExperimentKind::SparseLogistic => {
            let a = scaled_matrix(&mut rng, m, n, sparsity_level(n))?;
            let xhat: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let z = a.mul_vec(&xhat)?;
            let mut flipped = 0;
            let labels = z
                .iter()
                .map(|&v| {
                    let y = if v >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < LABEL_FLIP_PROB {
                        flipped += 1;
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            ExperimentData::Classification { a, labels, flipped }
        }
        ExperimentKind::TwoMoons => {
            let (points, moon) = two_moons_points(&mut rng, n, TWO_MOONS_NOISE);
            let edges = knn_graph(&points, TWO_MOONS_NEIGHBOURS);
            let mut nodes: Vec<usize> = (0..n).collect();
            // partial Fisher–Yates for the labeled set
            for i in 0..TWO_MOONS_LABELS {
                let j = rng.random_range(i..n);
                nodes.swap(i, j);
            }
            let labeled = nodes[..TWO_MOONS_LABELS]
                .iter()
                .map(|&u| (u, if moon[u] == 0 { -1.0 } else { 1.0 }))
                .collect();
            ExperimentData::Graph {
                points,
                moon,
                edges,
                labeled,
            }
        }
    };
    let problem = build_problem(spec, &data)?;
    let x0 = vec![0.0; problem.dim()];
    Ok(Experiment {
        spec: *spec,
        data,
        problem,
        x0,
    })
}

fn build_problem(spec: &ExperimentSpec, data: &ExperimentData) -> Result<Problem> {
    Ok(match (spec.kind, data) {
        (ExperimentKind::L1UnderdetLs, ExperimentData::Regression { a, b }) => {
            let f = LeastSquares::with_convention(a.clone(), b.clone(), 0.0, ScaleConvention::PerSample)?;
            Problem::composite(f, vec![SeparableTerm::Abs { weight: spec.lambda }; a.ncols()])?
        }
        (_, ExperimentData::Regression { a, b }) => Problem::smooth(LeastSquares::with_convention(
            a.clone(),
            b.clone(),
            spec.lambda,
            ScaleConvention::PerSample,
        )?),
        (_, ExperimentData::Classification { a, labels, .. }) => {
            Problem::smooth(Logistic::new(a.clone(), labels.clone(), spec.lambda)?)
        }
        (_, ExperimentData::Graph { points, edges, labeled, .. }) => {
            Problem::smooth(GraphQuadratic::new(points.len(), edges, labeled, &[])?)
        }
    })
}

impl Experiment {
    /// Writes Matrix Market data plus `manifest.json` into `dir`; returns the
    /// manifest path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let mtx = |name: &str, a: &SparseMatrix, sym: MarketSymmetry| -> Result<PathBuf> {
            let p = PathBuf::from(name);
            write_matrix_market(a, sym, BufWriter::new(File::create(dir.join(&p))?))?;
            Ok(p)
        };
        let (kind, term) = match &self.data {
            ExperimentData::Regression { a, b } => {
                let matrix = mtx("A.mtx", a, MarketSymmetry::General)?;
                let l1 = self.spec.kind == ExperimentKind::L1UnderdetLs;
                (
                    ManifestKind::LeastSquares {
                        matrix,
                        b: b.clone(),
                        l2: if l1 { 0.0 } else { self.spec.lambda },
                        scale: ScaleConvention::PerSample,
                    },
                    l1.then_some(SeparableTerm::Abs { weight: self.spec.lambda }),
                )
            }
            ExperimentData::Classification { a, labels, .. } => (
                ManifestKind::Logistic {
                    matrix: mtx("A.mtx", a, MarketSymmetry::General)?,
                    labels: labels.clone(),
                    l2: self.spec.lambda,
                },
                None,
            ),
            ExperimentData::Graph { points, edges, labeled, .. } => {
                let n = points.len();
                let mut t = Vec::with_capacity(2 * edges.len());
                for &(u, v, w) in edges {
                    t.push((u, v, w));
                    t.push((v, u, w));
                }
                let g = SparseMatrix::from_triplets(n, n, t)?;
                (
                    ManifestKind::GraphQuadratic {
                        graph: mtx("graph.mtx", &g, MarketSymmetry::Symmetric)?,
                        labeled: labeled.clone(),
                        node_reg: 0.0,
                    },
                    None,
                )
            }
        };
        let manifest = Manifest {
            kind,
            term,
            terms: None,
            x0: None,
        };
        let path = dir.join("manifest.json");
        serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &manifest)?;
        std::fs::write(dir.join("experiment.json"), serde_json::to_string_pretty(&self.spec)?)?;
        Ok(path)
    }
}

/// Connected components of an undirected graph (union–find).
pub fn connected_components(n: usize, edges: &[(usize, usize, f64)]) -> usize {
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for &(u, v, _) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

pub fn max_degree(n: usize, edges: &[(usize, usize, f64)]) -> usize {
    let mut d = vec![0usize; n];
    for &(u, v, _) in edges {
        d[u] += 1;
        d[v] += 1;
    }
    d.into_iter().max().unwrap_or(0)
}
