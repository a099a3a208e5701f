use super::*;
use crate::linalg::SparseMatrix;
use crate::problems::{DenseQuadratic, LeastSquares, ScaleConvention};

fn opts(max_iters: usize) -> RunOptions {
    RunOptions {
        max_iters: Some(max_iters),
        ..RunOptions::default()
    }
}

fn counterexample(b: [f64; 2], term: SeparableTerm) -> Problem {
    let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 0.7)]).unwrap();
    let f = LeastSquares::with_convention(a, b.to_vec(), 0.0, ScaleConvention::Half).unwrap();
    Problem::composite(f, vec![term; 2]).unwrap()
}

#[test]
fn exact_steps_solve_a_separable_quadratic_in_two_iterations() {
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 0.49], &[0.3, -2.0]).unwrap());
    for x0 in [[5.0, 1.0], [-1.0, 7.0], [0.3, 4.0]] {
        let tr = run(&p, &mut SelectionRule::new(RuleKind::Gs, 0), StepStrategy::ExactCoord, &x0, &opts(10)).unwrap();
        assert_eq!(tr.status, RunStatus::Converged);
        assert!(tr.iterations() <= 2, "{x0:?}");
        assert!(tr.final_objective().abs() < 1e-14);
    }
}

#[test]
fn gs_s_one_step_on_the_bound_constrained_counterexample() {
    let p = counterexample([-1.0, -3.0], SeparableTerm::nonneg());
    let tr = run(&p, &mut SelectionRule::new(RuleKind::GsS, 0), StepStrategy::Proximal, &[1.0, 0.1], &opts(1)).unwrap();
    assert_eq!(tr.coords(), vec![1]);
    assert!((tr.records[0].objective - 6.71245).abs() < 1e-12);
    assert!((tr.final_objective() - 6.5).abs() < 1e-12);
    let ratio = (tr.final_objective() - 5.0) / (tr.records[0].objective - 5.0);
    assert!((ratio - 0.88).abs() < 0.01, "{ratio}");
}

#[test]
fn gs_q_one_step_on_the_l1_counterexample() {
    let p = counterexample([2.0, -1.0], SeparableTerm::Abs { weight: 1.0 });
    let tr = run(&p, &mut SelectionRule::new(RuleKind::GsQ, 0), StepStrategy::Proximal, &[0.4, 0.5], &opts(1)).unwrap();
    assert_eq!(tr.coords(), vec![1]);
    assert!((tr.final_objective() - 2.18).abs() < 1e-12);
    let (_, fstar) = reference_optimum(&p, &[0.0, 0.0], 1e-14, 10_000).unwrap();
    assert!((fstar - 2.0).abs() < 1e-12);
    let ratio = (tr.final_objective() - fstar) / (tr.records[0].objective - fstar);
    assert!((ratio - 0.16).abs() < 0.01, "{ratio}");
}

#[test]
fn incompatible_triples_are_rejected_before_iterating() {
    let smooth = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 2.0], &[0.0, 0.0]).unwrap());
    let l1 = counterexample([2.0, -1.0], SeparableTerm::Abs { weight: 1.0 });
    let x0 = [1.0, 1.0];
    let cases: [(&Problem, RuleKind, StepStrategy); 5] = [
        (&smooth, RuleKind::Gs, StepStrategy::Proximal),
        (&l1, RuleKind::Gs, StepStrategy::ConstantGlobal),
        (&smooth, RuleKind::GsQ, StepStrategy::ConstantGlobal),
        (&l1, RuleKind::Mi, StepStrategy::Proximal),
        (&smooth, RuleKind::Mi, StepStrategy::ConstantGlobal),
    ];
    for (p, rule, step) in cases {
        let r = run(p, &mut SelectionRule::new(rule, 0), step, &x0, &opts(5));
        assert!(matches!(r, Err(Error::Incompatible(_))), "{rule} / {step}");
    }
}

fn small_ls() -> Problem {
    let t = vec![(0, 0, 1.0), (1, 0, -2.0), (1, 1, 0.5), (2, 1, 3.0), (2, 2, -1.0), (0, 2, 0.25), (3, 2, 1.0)];
    let a = SparseMatrix::from_triplets(4, 3, t).unwrap();
    Problem::smooth(LeastSquares::with_convention(a, vec![1.0, -2.0, 0.5, 3.0], 0.1, ScaleConvention::Half).unwrap())
}

#[test]
fn every_rule_descends_monotonically() {
    let p = small_ls();
    for kind in RuleKind::ALL.into_iter().filter(|k| !k.is_proximal()) {
        let mut rule = SelectionRule::new(kind, 11).with_schedule(ErrorSchedule::Constant(0.1));
        let step = StepStrategy::default_for(kind);
        let tr = run(&p, &mut rule, step, &[0.0; 3], &opts(300)).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12, "{kind}");
        }
        assert_ne!(tr.status, RunStatus::Diverged);
    }
}

#[test]
fn proximal_rules_converge_on_a_lasso() {
    let a = SparseMatrix::from_dense(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.5]).unwrap();
    let f = LeastSquares::with_convention(a, vec![1.0, -0.2, 0.7], 0.0, ScaleConvention::Half).unwrap();
    let p = Problem::composite(f, vec![SeparableTerm::Abs { weight: 0.3 }; 3]).unwrap();
    let (_, fstar) = reference_optimum(&p, &[0.0; 3], 1e-14, 100_000).unwrap();
    for kind in [RuleKind::GsS, RuleKind::GsR, RuleKind::GsQ, RuleKind::GslQ, RuleKind::GslR, RuleKind::Uniform] {
        let step = if kind == RuleKind::Uniform { StepStrategy::Proximal } else { StepStrategy::default_for(kind) };
        let tr = run(&p, &mut SelectionRule::new(kind, 5), step, &[0.0; 3], &opts(2000)).unwrap();
        assert_eq!(tr.status, RunStatus::Converged, "{kind}");
        assert!(tr.final_objective() - fstar < 1e-9, "{kind}");
    }
}

#[test]
fn identical_seeds_reproduce_index_sequences() {
    let p = small_ls();
    let go = |seed| {
        run(&p, &mut SelectionRule::new(RuleKind::Uniform, seed), StepStrategy::ConstantGlobal, &[0.0; 3], &opts(50))
            .unwrap()
            .coords()
    };
    assert_eq!(go(3), go(3));
    assert_ne!(go(3), go(4));
}

#[test]
fn race_with_zero_budget_keeps_only_the_initial_row() {
    let p = small_ls();
    let entries: Vec<RaceEntry> = [RuleKind::Uniform, RuleKind::Cyclic, RuleKind::Gs].into_iter().map(RaceEntry::new).collect();
    let traces = race(&p, &entries, &[0.0; 3], &opts(0), 1).unwrap();
    assert!(traces.iter().all(|t| t.records.len() == 1));
    let f0 = p.value(&[0.0; 3]);
    assert!(traces.iter().all(|t| (t.records[0].objective - f0).abs() < 1e-15));
}

#[test]
fn race_of_identical_deterministic_rules_gives_identical_traces() {
    let p = small_ls();
    let traces = race(&p, &[RaceEntry::new(RuleKind::Gs), RaceEntry::new(RuleKind::Gs)], &[0.0; 3], &opts(40), 9).unwrap();
    let strip = |t: &RunTrace| t.records.iter().map(|r| (r.coord, r.objective, r.step)).collect::<Vec<_>>();
    assert_eq!(strip(&traces[0]), strip(&traces[1]));
}

#[test]
fn race_streams_are_independent_per_entry() {
    let p = small_ls();
    let e = RaceEntry::new(RuleKind::Uniform);
    let traces = race(&p, &[e.clone(), e], &[0.0; 3], &opts(40), 9).unwrap();
    assert_ne!(traces[0].coords(), traces[1].coords());
}

#[test]
fn race_stream_of_a_rule_ignores_its_position() {
    let p = small_ls();
    let (u, l) = (RaceEntry::new(RuleKind::Uniform), RaceEntry::new(RuleKind::Lipschitz));
    let a = race(&p, &[u.clone(), l.clone()], &[0.0; 3], &opts(40), 9).unwrap();
    let b = race(&p, &[l, u], &[0.0; 3], &opts(40), 9).unwrap();
    assert_eq!(a[0].coords(), b[1].coords());
    assert_eq!(a[1].coords(), b[0].coords());
    let mut solo = SelectionRule::with_rng(RuleKind::Uniform, race_rng(9, RuleKind::Uniform.ordinal()));
    let t = run(&p, &mut solo, StepStrategy::default_for(RuleKind::Uniform), &[0.0; 3], &opts(40)).unwrap();
    assert_eq!(t.coords(), a[0].coords());
}

#[test]
fn csv_round_trips_bit_exactly() {
    let p = small_ls();
    let tr = run(&p, &mut SelectionRule::new(RuleKind::Gsl, 0), StepStrategy::ConstantPerCoord, &[0.0; 3], &opts(25)).unwrap();
    let mut buf = Vec::new();
    write_csv(&tr.records, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(text.lines().nth(1).unwrap().starts_with("0,") && text.lines().nth(1).unwrap().contains(",-1,"));
    let back = read_csv(&buf[..]).unwrap();
    assert_eq!(back, tr.records);
}

#[test]
fn csv_rejects_malformed_input() {
    assert!(read_csv("k,objective\n".as_bytes()).is_err());
    let bad = format!("{CSV_HEADER}\n1,2.0,3\n");
    assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn recorded_iterates_replay_the_objective() {
    let p = small_ls();
    let o = RunOptions {
        record_iterates: true,
        ..opts(20)
    };
    let tr = run(&p, &mut SelectionRule::new(RuleKind::Cyclic, 0), StepStrategy::ExactCoord, &[0.0; 3], &o).unwrap();
    assert_eq!(tr.iterates.len(), tr.records.len());
    for (x, r) in tr.iterates.iter().zip(&tr.records) {
        assert!((p.value(x) - r.objective).abs() < 1e-12);
    }
}
