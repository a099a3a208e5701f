use nalgebra::{DMatrix, DVector};

use crate::descent::{run, RunOptions, StepStrategy};
use crate::error::Result;
use crate::problems::{LinearModel, Problem, SeparableTerm, SmoothProblem};
use crate::tracker::prox_point;
use crate::rules::{RuleKind, SelectionRule};
use crate::tracker::Backend;

/// Largest dimension solved densely.
const DENSE_MAX: usize = 2000;

/// Reference optimum `(x*, F*)`.
///
/// Smooth quadratics are solved directly: `∇f(x) = Hx + ∇f(0)`, so
/// `x* = −H⁻¹∇f(0)` by Cholesky (SVD least squares when `H` is singular).
/// Other smooth problems use damped Newton on a finite-difference Hessian.
/// Composite h₁ problems use cyclic proximal descent on a cached `Ax`; any
/// other composite problem runs long greedy descent with per-coordinate steps.
pub fn reference_solution(problem: &Problem, x0: &[f64]) -> Result<(Vec<f64>, f64)> {
    let f = problem.f();
    let n = f.dim();
    if !problem.is_composite() && !f.is_quadratic() && n <= DENSE_MAX {
        let x = newton(f, x0)?;
        let v = problem.value(&x);
        return Ok((x, v));
    }
    if !problem.is_composite() && f.is_quadratic() && n <= DENSE_MAX {
        if let Some(h) = f.hessian_dense() {
            let hm = DMatrix::from_row_slice(n, n, &h);
            let g0 = DVector::from_vec(f.full_grad(&vec![0.0; n]));
            let x = match hm.clone().cholesky() {
                Some(c) => c.solve(&(-&g0)),
                None => hm.svd(true, true).solve(&(-&g0), 1e-12).map_err(crate::error::Error::invalid)?,
            };
            let x: Vec<f64> = x.iter().copied().collect();
            let v = problem.value(&x);
            return Ok((x, v));
        }
    }
    if let (Some(lm), Some(terms)) = (f.linear_model(), problem.terms()) {
        let x = h1_prox_cd(lm, f.lipschitz(), terms, x0)?;
        let v = problem.value(&x);
        return Ok((x, v));
    }
    let (rule, step) = if problem.is_composite() {
        (RuleKind::GslQ, StepStrategy::ProximalPerCoord)
    } else {
        (RuleKind::Gsl, StepStrategy::ExactCoord)
    };
    let opts = RunOptions {
        max_iters: Some(20_000 * n.max(10)),
        tol: 1e-12,
        backend: Backend::Heap,
        check_bounds: false,
        ..RunOptions::default()
    };
    let tr = run(problem, &mut SelectionRule::new(rule, 0), step, x0, &opts)?;
    let v = problem.value(&tr.x_final);
    Ok((tr.x_final, v))
}

/// Central-difference Hessian of `∇f`, symmetrized.
fn fd_hessian(f: &dyn SmoothProblem, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let t = 1e-5 * x[j].abs().max(1.0);
        xp[j] = x[j] + t;
        let gp = f.full_grad(&xp);
        xp[j] = x[j] - t;
        let gm = f.full_grad(&xp);
        xp[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * t);
        }
    }
    (&h + h.transpose()) * 0.5
}

fn newton(f: &dyn SmoothProblem, x0: &[f64]) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut fx = f.value(&x);
    let g0 = f.full_grad(&x).iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    for _ in 0..200 {
        let g = DVector::from_vec(f.full_grad(&x));
        if g.amax() <= 1e-14 * g0 {
            break;
        }
        let mut h = fd_hessian(f, &x);
        let mut ridge = 0.0;
        let d = loop {
            if let Some(c) = h.clone().cholesky() {
                break c.solve(&(-&g));
            }
            let bump = if ridge == 0.0 { 1e-12 * h.diagonal().amax().max(1.0) } else { ridge * 9.0 };
            for i in 0..h.nrows() {
                h[(i, i)] += bump;
            }
            ridge += bump;
        };
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
            let ft = f.value(&trial);
            if ft <= fx + 1e-4 * t * slope {
                moved = ft < fx || trial != x;
                x = trial;
                fx = ft;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(x)
}

/// Cyclic `1/Lᵢ` proximal coordinate descent that keeps `z = Ax` directly,
/// so each coordinate costs one pass over its column.
fn h1_prox_cd(lm: &dyn LinearModel, lips: &[f64], terms: &[SeparableTerm], x0: &[f64]) -> Result<Vec<f64>> {
    let a = lm.matrix();
    let mut x = x0.to_vec();
    let mut z = a.mul_vec(&x)?;
    for epoch in 0..H1_MAX_EPOCHS {
        if epoch % 100 == 99 {
            z = a.mul_vec(&x)?;
        }
        let mut biggest: f64 = 0.0;
        for i in 0..x.len() {
            let (rows, vals) = a.col(i);
            let g = rows.iter().zip(vals).map(|(&r, &v)| v * lm.link_grad(r, z[r])).sum::<f64>() + lm.node_grad(i, x[i]);
            let xi = prox_point(x[i], g, lips[i], terms[i]);
            let d = xi - x[i];
            if d != 0.0 {
                for (&r, &v) in rows.iter().zip(vals) {
                    z[r] += v * d;
                }
                x[i] = xi;
            }
            biggest = biggest.max(d.abs());
        }
        let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if biggest <= 1e-15 * scale {
            break;
        }
    }
    Ok(x)
}

const H1_MAX_EPOCHS: usize = 200_000;
