//! Incremental gradient maintenance.
//!
//! For h₁ problems the tracker caches `Ax`, `r = ∇φ(Ax)` and `Aᵀr`; changing
//! `xᵢ` touches the ≤ c rows of column `i` and, through them, ≤ c·r gradient
//! entries. For h₂ problems it caches the node gradients and the per-edge
//! partials; changing `xᵢ` touches the ≤ d incident edges. Scores live in an
//! [`IndexedMaxHeap`] so the arg-max is an O(1) lookup.

mod score;

pub use score::{model_decrease, prox_point, prox_step, ResidKind, ScoreKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::IndexedMaxHeap;
use crate::problems::{LinearModel, PairwiseModel, Problem, SeparableTerm};

pub const DEFAULT_REFRESH_INTERVAL: usize = 10_000;

/// How the arg-max over scores is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Heap,
    /// O(n) scan per query.
    Scan,
    /// Ball-tree search over columns; scores are kept by scanning.
    Nns,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerOptions {
    pub score: ScoreKind,
    pub resid: ResidKind,
    pub backend: Backend,
    pub refresh_interval: usize,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            score: ScoreKind::Gs,
            resid: ResidKind::Grad,
            backend: Backend::Heap,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
        }
    }
}

/// Work done by one [`Tracker::apply_update`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Rows of `A` (h₁) or edges (h₂) visited.
    pub touched_rows: usize,
    /// Distinct gradient entries changed.
    pub touched_grads: usize,
    pub heap_ops: usize,
}

enum Engine<'a> {
    H1 {
        model: &'a dyn LinearModel,
        ax: Vec<f64>,
        r: Vec<f64>,
        atg: Vec<f64>,
    },
    H2 {
        model: &'a dyn PairwiseModel,
        node_g: Vec<f64>,
        edge_g: Vec<(f64, f64)>,
    },
}

pub struct Tracker<'a> {
    problem: &'a Problem,
    engine: Engine<'a>,
    opts: TrackerOptions,
    x: Vec<f64>,
    grad: Vec<f64>,
    objective: f64,
    l_global: f64,
    scores: Vec<f64>,
    resids: Vec<f64>,
    score_heap: Option<IndexedMaxHeap>,
    resid_heap: Option<IndexedMaxHeap>,
    since_refresh: usize,
    stamp: Vec<u64>,
    epoch: u64,
    touched: Vec<usize>,
}

impl<'a> Tracker<'a> {
    pub fn new(problem: &'a Problem, x0: &[f64], opts: TrackerOptions) -> Result<Self> {
        let n = problem.dim();
        if n == 0 {
            return Err(Error::invalid("problem has no coordinates"));
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
        }
        if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("x0[{i}]")));
        }
        for (i, &xi) in x0.iter().enumerate() {
            if !problem.term(i).contains(xi) {
                return Err(Error::invalid(format!("x0[{i}] = {xi} is outside the domain of its term")));
            }
        }
        if opts.refresh_interval == 0 {
            return Err(Error::invalid("refresh interval must be positive"));
        }
        let f = problem.f();
        let engine = if let Some(model) = f.linear_model() {
            Engine::H1 {
                model,
                ax: Vec::new(),
                r: Vec::new(),
                atg: Vec::new(),
            }
        } else if let Some(model) = f.pairwise_model() {
            Engine::H2 {
                model,
                node_g: Vec::new(),
                edge_g: Vec::new(),
            }
        } else {
            return Err(Error::Incompatible(
                "problem exposes neither a linear-composition nor a pairwise structure".into(),
            ));
        };
        let mut t = Self {
            problem,
            engine,
            opts,
            x: x0.to_vec(),
            grad: vec![0.0; n],
            objective: 0.0,
            l_global: f.max_lipschitz(),
            scores: vec![0.0; n],
            resids: vec![0.0; n],
            score_heap: None,
            resid_heap: None,
            since_refresh: 0,
            stamp: vec![0; n],
            epoch: 0,
            touched: Vec::new(),
        };
        t.refresh()?;
        Ok(t)
    }

    /// Recomputes every cache from `x`.
    pub fn refresh(&mut self) -> Result<()> {
        let n = self.x.len();
        let x = &self.x;
        match &mut self.engine {
            Engine::H1 { model, ax, r, atg } => {
                let a = model.matrix();
                *ax = a.mul_vec(x)?;
                *r = ax.iter().enumerate().map(|(j, &z)| model.link_grad(j, z)).collect();
                *atg = a.t_mul_vec(r)?;
                for i in 0..n {
                    self.grad[i] = atg[i] + model.node_grad(i, x[i]);
                }
            }
            Engine::H2 { model, node_g, edge_g } => {
                *node_g = (0..n).map(|i| model.node_grad(i, x[i])).collect();
                *edge_g = model
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(e, &(u, v))| model.edge_grad(e, x[u], x[v]))
                    .collect();
                self.grad.copy_from_slice(node_g);
                for (&(u, v), &(gu, gv)) in model.edges().iter().zip(edge_g.iter()) {
                    self.grad[u] += gu;
                    self.grad[v] += gv;
                }
            }
        }
        self.objective = self.problem.value(&self.x);
        for i in 0..n {
            self.scores[i] = self.score_of(i);
            self.resids[i] = self.resid_of(i);
        }
        if let Some(i) = self.scores.iter().chain(&self.resids).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("score or residual entry {}", i % n)));
        }
        if self.opts.backend == Backend::Heap {
            self.score_heap = Some(IndexedMaxHeap::build(self.scores.clone())?);
        }
        if self.opts.backend != Backend::Scan {
            self.resid_heap = Some(IndexedMaxHeap::build(self.resids.clone())?);
        }
        self.since_refresh = 0;
        Ok(())
    }

    fn score_of(&self, i: usize) -> f64 {
        let li = self.problem.f().lipschitz()[i];
        score::score(self.opts.score, self.x[i], self.grad[i], li, self.l_global, self.problem.term(i))
    }

    fn resid_of(&self, i: usize) -> f64 {
        let li = self.problem.f().lipschitz()[i];
        score::resid(self.opts.resid, self.x[i], self.grad[i], li, self.l_global, self.problem.term(i))
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn options(&self) -> &TrackerOptions {
        &self.opts
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Incrementally maintained `F(x)`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn l_global(&self) -> f64 {
        self.l_global
    }

    /// Cached `Ax` for h₁ problems.
    pub fn ax(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::H1 { ax, .. } => Some(ax),
            Engine::H2 { .. } => None,
        }
    }

    /// Cached residual `r = ∇φ(Ax)` for h₁ problems.
    pub fn link_residual(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::H1 { r, .. } => Some(r),
            Engine::H2 { .. } => None,
        }
    }

    /// `Aᵀr` for h₁ problems.
    pub fn at_residual(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::H1 { atg, .. } => Some(atg),
            Engine::H2 { .. } => None,
        }
    }

    /// Per-edge partials for h₂ problems.
    pub fn edge_partials(&self) -> Option<&[(f64, f64)]> {
        match &self.engine {
            Engine::H2 { edge_g, .. } => Some(edge_g),
            Engine::H1 { .. } => None,
        }
    }

    /// Budget `(rows, grads)` that one update may touch: `(c, c·r)` for h₁,
    /// `(d, d + 1)` for h₂.
    pub fn budget(&self) -> (usize, usize) {
        match &self.engine {
            Engine::H1 { model, .. } => {
                let a = model.matrix();
                let c = a.max_col_nnz();
                // node term of the updated coordinate lives outside A
                (c, (c * a.max_row_nnz()).max(1))
            }
            Engine::H2 { model, .. } => {
                let d = model.max_degree();
                (d, d + 1)
            }
        }
    }

    /// Arg-max of the active score; smallest index on ties.
    pub fn peek(&self) -> (usize, f64) {
        match &self.score_heap {
            Some(h) => h.peek(),
            None => scan_argmax(&self.scores),
        }
    }

    /// `max_i resid_i`: `‖∇f‖∞`, or `‖d‖∞` for proximal residuals.
    pub fn resid_max(&self) -> f64 {
        match &self.resid_heap {
            Some(h) => h.peek().1,
            None => scan_argmax(&self.resids).1,
        }
    }

    /// Sets `xᵢ ← new_xi` and restores every cache and heap.
    pub fn apply_update(&mut self, i: usize, new_xi: f64) -> Result<UpdateStats> {
        let n = self.x.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if !new_xi.is_finite() {
            return Err(Error::NonFinite(format!("new x[{i}] = {new_xi}")));
        }
        let term = self.problem.term(i);
        if !term.contains(new_xi) {
            return Err(Error::invalid(format!("x[{i}] = {new_xi} leaves the domain of its term")));
        }
        let old = self.x[i];
        if new_xi == old {
            return Ok(UpdateStats::default());
        }
        let delta = new_xi - old;
        self.x[i] = new_xi;
        self.objective += term.value(new_xi) - term.value(old);
        self.epoch += 1;
        self.touched.clear();
        let mut stats = UpdateStats::default();

        let x = &self.x;
        let grad = &mut self.grad;
        let stamp = &mut self.stamp;
        let touched = &mut self.touched;
        let epoch = self.epoch;
        let mut mark = |k: usize| {
            if stamp[k] != epoch {
                stamp[k] = epoch;
                touched.push(k);
            }
        };
        match &mut self.engine {
            Engine::H1 { model, ax, r, atg } => {
                let a = model.matrix();
                self.objective += model.node_value(i, new_xi) - model.node_value(i, old);
                mark(i);
                let (rows, vals) = a.col(i);
                stats.touched_rows = rows.len();
                for (&j, &aji) in rows.iter().zip(vals) {
                    let z_old = ax[j];
                    let z_new = z_old + aji * delta;
                    ax[j] = z_new;
                    self.objective += model.link_value(j, z_new) - model.link_value(j, z_old);
                    let r_new = model.link_grad(j, z_new);
                    let dr = r_new - r[j];
                    r[j] = r_new;
                    let (cols, rv) = a.row(j);
                    for (&k, &ajk) in cols.iter().zip(rv) {
                        atg[k] += ajk * dr;
                        mark(k);
                    }
                }
                for &k in touched.iter() {
                    grad[k] = atg[k] + model.node_grad(k, x[k]);
                }
            }
            Engine::H2 { model, node_g, edge_g } => {
                self.objective += model.node_value(i, new_xi) - model.node_value(i, old);
                let ng = model.node_grad(i, new_xi);
                grad[i] += ng - node_g[i];
                node_g[i] = ng;
                mark(i);
                let inc = model.incident(i);
                stats.touched_rows = inc.len();
                for &e in inc {
                    let (u, v) = model.edges()[e];
                    let (xu_old, xv_old) = if u == i { (old, x[v]) } else { (x[u], old) };
                    self.objective += model.edge_value(e, x[u], x[v]) - model.edge_value(e, xu_old, xv_old);
                    let (gu, gv) = model.edge_grad(e, x[u], x[v]);
                    let (ou, ov) = edge_g[e];
                    grad[u] += gu - ou;
                    grad[v] += gv - ov;
                    edge_g[e] = (gu, gv);
                    mark(u);
                    mark(v);
                }
            }
        }
        stats.touched_grads = self.touched.len();

        for idx in 0..self.touched.len() {
            let k = self.touched[idx];
            let s = self.score_of(k);
            let rk = self.resid_of(k);
            if !s.is_finite() || !rk.is_finite() {
                return Err(Error::NonFinite(format!("score of coordinate {k}")));
            }
            self.scores[k] = s;
            self.resids[k] = rk;
            if let Some(h) = &mut self.score_heap {
                h.update_key(k, s)?;
                stats.heap_ops += 1;
            }
            if let Some(h) = &mut self.resid_heap {
                h.update_key(k, rk)?;
                stats.heap_ops += 1;
            }
        }

        self.since_refresh += 1;
        if self.since_refresh >= self.opts.refresh_interval {
            self.refresh()?;
        }
        Ok(stats)
    }

    /// Exact change of `F` if `xᵢ` were set to `new_xi`, in O(c) (h₁) or
    /// O(d) (h₂) without touching any cache.
    pub fn objective_delta(&self, i: usize, new_xi: f64) -> f64 {
        let old = self.x[i];
        let term = self.problem.term(i);
        let mut delta = term.value(new_xi) - term.value(old);
        let dx = new_xi - old;
        match &self.engine {
            Engine::H1 { model, ax, .. } => {
                delta += model.node_value(i, new_xi) - model.node_value(i, old);
                let (rows, vals) = model.matrix().col(i);
                for (&j, &aji) in rows.iter().zip(vals) {
                    delta += model.link_value(j, ax[j] + aji * dx) - model.link_value(j, ax[j]);
                }
            }
            Engine::H2 { model, .. } => {
                delta += model.node_value(i, new_xi) - model.node_value(i, old);
                for &e in model.incident(i) {
                    let (u, v) = model.edges()[e];
                    let (nu, nv) = if u == i { (new_xi, self.x[v]) } else { (self.x[u], new_xi) };
                    delta += model.edge_value(e, nu, nv) - model.edge_value(e, self.x[u], self.x[v]);
                }
            }
        }
        delta
    }

    pub fn term(&self, i: usize) -> SeparableTerm {
        self.problem.term(i)
    }
}

/// First index attaining the maximum.
pub fn scan_argmax(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = i;
        }
    }
    (best, v[best])
}
