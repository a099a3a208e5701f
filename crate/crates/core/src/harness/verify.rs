//! Fast invariant suite over small instances, used by the `verify` command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::counterexample::run_counterexamples;
use super::generate::{gen_experiment, ExperimentKind, ExperimentSpec};
use crate::analysis::{mu1_brute, mu1_diag, mu_l_brute, mu_l_diag};
use crate::descent::{read_csv, run, write_csv, RunOptions, StepStrategy};
use crate::error::{Error, Result};
use crate::linalg::IndexedMaxHeap;
use crate::problems::{check_coordinate_lipschitz, check_finite_differences, DenseQuadratic, Problem};
use crate::rules::{RuleKind, SelectionRule};
use crate::tracker::{scan_argmax, Backend, Tracker, TrackerOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("{tag} {:<28} {:>6} ms  {}\n", c.name, c.millis, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        s
    }
}

fn tiny_spec(kind: ExperimentKind, seed: u64) -> ExperimentSpec {
    let (m, n) = match kind {
        ExperimentKind::SparseLs | ExperimentKind::SparseLogistic => (40, 30),
        ExperimentKind::DenseOverdetLs => (40, 8),
        ExperimentKind::L1UnderdetLs => (20, 40),
        ExperimentKind::TwoMoons => (0, 60),
    };
    ExperimentSpec {
        m,
        n,
        ..ExperimentSpec::desk(kind, seed)
    }
}

fn generated_problems() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in ExperimentKind::ALL {
        let exp = gen_experiment(&tiny_spec(kind, 3))?;
        let f = exp.problem.f();
        let n = f.dim();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coords: Vec<usize> = (0..n).collect();
        check_finite_differences(f, &x, &coords)?;
        check_coordinate_lipschitz(f, &mut rng, 20)?;
    }
    Ok(format!("{} experiment kinds", ExperimentKind::ALL.len()))
}

fn convexity_constants() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=6);
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let lips: Vec<f64> = lambda.iter().map(|l| l * rng.random_range(1.0..3.0)).collect();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = lambda[i];
        }
        let (c1, b1) = (mu1_diag(&lambda)?, mu1_brute(&h, n)?);
        let (cl, bl) = (mu_l_diag(&lambda, &lips)?, mu_l_brute(&h, n, &lips)?);
        worst = worst.max(((c1 - b1) / c1).abs()).max(((cl - bl) / cl).abs());
    }
    if worst > 1e-9 {
        return Err(Error::CheckFailed(format!("closed form vs brute force relative error {worst:e}")));
    }
    Ok(format!("max rel err {worst:.1e}"))
}

fn heap_vs_scan() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 64;
    let mut keys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut heap = IndexedMaxHeap::build(keys.clone())?;
    for _ in 0..5000 {
        let i = rng.random_range(0..n);
        let v = rng.random::<f64>();
        keys[i] = v;
        heap.update_key(i, v)?;
        if heap.peek().1 != scan_argmax(&keys).1 {
            return Err(Error::CheckFailed("heap max differs from scan".into()));
        }
    }
    Ok("5000 updates".into())
}

fn tracker_vs_dense() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for kind in [ExperimentKind::SparseLs, ExperimentKind::SparseLogistic, ExperimentKind::TwoMoons] {
        let exp = gen_experiment(&tiny_spec(kind, 5))?;
        let p = &exp.problem;
        let mut t = Tracker::new(p, &exp.x0, TrackerOptions { backend: Backend::Heap, ..TrackerOptions::default() })?;
        for _ in 0..300 {
            let i = rng.random_range(0..p.dim());
            let v = t.x()[i] + rng.random_range(-0.5..0.5);
            t.apply_update(i, v)?;
        }
        let dense = p.f().full_grad(t.x());
        let scale = dense.iter().fold(1.0_f64, |a, g| a.max(g.abs()));
        for (a, b) in t.grad().iter().zip(&dense) {
            worst = worst.max((a - b).abs() / scale);
        }
        if t.peek().1 != scan_argmax(t.scores()).1 {
            return Err(Error::CheckFailed(format!("{kind}: tracker peek differs from scan")));
        }
    }
    if worst > 1e-8 {
        return Err(Error::CheckFailed(format!("incremental gradient error {worst:e}")));
    }
    Ok(format!("max rel err {worst:.1e}"))
}

fn bounded_runs() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 10;
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
    let xstar: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = Problem::smooth(DenseQuadratic::diagonal(&lambda, &xstar)?);
    let opts = RunOptions {
        max_iters: Some(100),
        check_bounds: true,
        ..RunOptions::default()
    };
    let x0 = vec![0.0; n];
    for rule in [RuleKind::Uniform, RuleKind::Cyclic, RuleKind::Lipschitz, RuleKind::Gs, RuleKind::Gsl] {
        run(&p, &mut SelectionRule::new(rule, 7), StepStrategy::default_for(rule), &x0, &opts)?;
    }
    Ok("5 rules × 100 iterations".into())
}

fn csv_round_trip() -> Result<String> {
    let exp = gen_experiment(&tiny_spec(ExperimentKind::SparseLs, 8))?;
    let opts = RunOptions {
        max_iters: Some(50),
        ..RunOptions::default()
    };
    let tr = run(&exp.problem, &mut SelectionRule::new(RuleKind::Gs, 0), StepStrategy::ConstantPerCoord, &exp.x0, &opts)?;
    let mut buf = Vec::new();
    write_csv(&tr.records, &mut buf)?;
    let back = read_csv(buf.as_slice())?;
    if back != tr.records {
        return Err(Error::CheckFailed("CSV round trip changed the trace".into()));
    }
    Ok(format!("{} rows", back.len()))
}

fn counterexamples() -> Result<String> {
    let r = run_counterexamples()?;
    if !r.passed() {
        return Err(Error::CheckFailed(r.to_text()));
    }
    Ok(format!("{} cases", r.cases.len()))
}

type Check = (&'static str, fn() -> Result<String>);

/// Runs every check; errors are recorded as failures rather than propagated.
pub fn verify_all() -> VerifyReport {
    let checks: [Check; 7] = [
        ("generated problem checks", generated_problems),
        ("convexity constants", convexity_constants),
        ("heap vs scan", heap_vs_scan),
        ("tracker vs dense gradient", tracker_vs_dense),
        ("per-iteration bounds", bounded_runs),
        ("trace csv round trip", csv_round_trip),
        ("counterexamples", counterexamples),
    ];
    let checks = checks
        .iter()
        .map(|&(name, f)| {
            let t = Instant::now();
            let r = f();
            let millis = t.elapsed().as_millis();
            match r {
                Ok(detail) => CheckOutcome { name, passed: true, detail, millis },
                Err(e) => CheckOutcome { name, passed: false, detail: e.to_string(), millis },
            }
        })
        .collect();
    VerifyReport { checks }
}
