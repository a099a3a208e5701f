use super::*;
use crate::linalg::SparseMatrix;
use crate::problems::{DenseQuadratic, LeastSquares, ScaleConvention, SeparableTerm};
use crate::tracker::TrackerOptions;
use proptest::prelude::*;

fn tracker_for<'a>(p: &'a Problem, x0: &[f64], kind: RuleKind) -> Tracker<'a> {
    let opts = TrackerOptions {
        score: kind.score(),
        ..TrackerOptions::default()
    };
    Tracker::new(p, x0, opts).unwrap()
}

#[test]
fn names_round_trip() {
    for k in RuleKind::ALL {
        assert_eq!(k.name().parse::<RuleKind>().unwrap(), k);
    }
    assert!("gauss".parse::<RuleKind>().is_err());
}

#[test]
fn gs_picks_the_larger_gradient() {
    assert_eq!(gs_index(&[2.0, 2.1]), 1);
    assert_eq!(gs_index(&[-3.0, 2.0, 3.0]), 0, "ties go to the smallest index");
    assert_eq!(gsl_index(&[2.0, 2.1], &[1.0, 4.0]), 0);
}

#[test]
fn gs_through_tracker() {
    // f = ½‖x − c‖² with gradient (2.0, 2.1) at the origin
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 1.0], &[2.0, 2.1]).unwrap());
    let t = tracker_for(&p, &[0.0, 0.0], RuleKind::Gs);
    let mut rule = SelectionRule::new(RuleKind::Gs, 0);
    rule.prepare(&p, Backend::Heap).unwrap();
    assert_eq!(rule.select(1, &t).unwrap().index, 1);
}

#[test]
fn lipschitz_sampling_matches_its_distribution() {
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 3.0], &[0.0, 0.0]).unwrap());
    let t = tracker_for(&p, &[1.0, 1.0], RuleKind::Lipschitz);
    let mut rule = SelectionRule::new(RuleKind::Lipschitz, 7);
    rule.prepare(&p, Backend::Heap).unwrap();
    let draws = 100_000;
    let mut ones = 0usize;
    for k in 1..=draws {
        ones += rule.select(k, &t).unwrap().index;
    }
    let expected = [0.25 * draws as f64, 0.75 * draws as f64];
    let observed = [(draws - ones) as f64, ones as f64];
    let chi2: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    // 1 degree of freedom, 0.999 quantile
    assert!(chi2 < 10.83, "χ² = {chi2}");
}

#[test]
fn uniform_and_cyclic() {
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 1.0, 1.0], &[0.0; 3]).unwrap());
    let t = tracker_for(&p, &[1.0; 3], RuleKind::Uniform);
    let mut cyc = SelectionRule::new(RuleKind::Cyclic, 0);
    let picks: Vec<usize> = (1..=7).map(|k| cyc.select(k, &t).unwrap().index).collect();
    assert_eq!(picks, vec![0, 1, 2, 0, 1, 2, 0]);
    let mut a = SelectionRule::new(RuleKind::Uniform, 3);
    let mut b = SelectionRule::new(RuleKind::Uniform, 3);
    let mut counts = [0usize; 3];
    for k in 1..=3000 {
        let i = a.select(k, &t).unwrap().index;
        assert_eq!(i, b.select(k, &t).unwrap().index, "same seed, same draws");
        counts[i] += 1;
    }
    assert!(counts.iter().all(|&c| c > 900), "{counts:?}");
}

#[test]
fn approximate_gs_worst_admissible() {
    let g = [3.0, 2.5, 1.0];
    assert_eq!(select_approx_gs(&g, 0.2, ApproxRegime::Multiplicative, true).unwrap(), 1);
    // threshold 2.6 excludes 2.5, so only the exact choice is admissible
    assert_eq!(select_approx_gs(&g, 0.4, ApproxRegime::Additive, true).unwrap(), 0);
    assert_eq!(select_approx_gs(&g, 0.5, ApproxRegime::Additive, true).unwrap(), 1);
    assert_eq!(select_approx_gs(&g, 0.2, ApproxRegime::Multiplicative, false).unwrap(), 0);
    assert_eq!(select_approx_gs(&g, 0.0, ApproxRegime::Additive, true).unwrap(), 0);
    assert!(select_approx_gs(&g, 1.0, ApproxRegime::Multiplicative, true).is_err());
    assert!(select_approx_gs(&g, -0.1, ApproxRegime::Additive, true).is_err());
}

#[test]
fn error_schedules() {
    assert_eq!(ErrorSchedule::Constant(0.3).at(9), 0.3);
    let g = ErrorSchedule::Geometric { scale: 1.0, ratio: 0.5 };
    assert_eq!(g.at(3), 0.125);
    let e = ErrorSchedule::Explicit(vec![0.1, 0.2]);
    assert_eq!((e.at(1), e.at(2), e.at(5)), (0.1, 0.2, 0.2));
    let mut r = SelectionRule::new(RuleKind::GsApproxMult, 0).with_schedule(ErrorSchedule::Constant(1.5));
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0], &[0.0]).unwrap());
    assert!(r.prepare(&p, Backend::Heap).is_err());
}

proptest! {
    #[test]
    fn approx_choice_is_admissible(g in prop::collection::vec(-5.0f64..5.0, 1..12), eps in 0.0f64..0.99) {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for regime in [ApproxRegime::Multiplicative, ApproxRegime::Additive] {
            let i = select_approx_gs(&g, eps, regime, true).unwrap();
            prop_assert!(g[i].abs() >= regime.threshold(gmax, eps));
            for a in g.iter() {
                if a.abs() >= regime.threshold(gmax, eps) {
                    prop_assert!(a.abs() >= g[i].abs());
                }
            }
        }
    }
}

/// `½‖diag(1, 0.7)x − b‖²`, so `L = 1`.
fn counterexample_quadratic(b: [f64; 2]) -> LeastSquares {
    let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 0.7)]).unwrap();
    LeastSquares::with_convention(a, b.to_vec(), 0.0, ScaleConvention::Half).unwrap()
}

#[test]
fn gs_s_is_fooled_where_gs_r_and_gs_q_are_not() {
    // nonnegativity, x⁰ = (1, 0.1)
    let p = Problem::composite(counterexample_quadratic([-1.0, -3.0]), vec![SeparableTerm::nonneg(); 2]).unwrap();
    let x = [1.0, 0.1];
    let g = p.f().full_grad(&x);
    let c = prox_candidates(&x, &g, &p, StepScale::Global(1.0));
    assert_eq!(gs_s_index(&x, &g, &p), 1);
    assert_eq!(gs_r_index(&c), 0);
    assert_eq!(gs_q_index(&c), 0);
}

#[test]
fn gs_r_is_fooled_where_gs_q_is_not() {
    let p = Problem::composite(counterexample_quadratic([2.0, -1.0]), vec![SeparableTerm::Abs { weight: 1.0 }; 2]).unwrap();
    let x = [0.4, 0.5];
    let g = p.f().full_grad(&x);
    let c = prox_candidates(&x, &g, &p, StepScale::Global(1.0));
    assert!((c[0].d - 0.6).abs() < 1e-12 && (c[1].d + 0.5).abs() < 1e-12);
    assert!((c[0].v + 0.18).abs() < 1e-12 && (c[1].v + 0.8475).abs() < 1e-12);
    assert_eq!(gs_r_index(&c), 0);
    assert_eq!(gs_q_index(&c), 1);
}

#[test]
fn prox_subgradient_lies_in_the_subdifferential() {
    let p = Problem::composite(counterexample_quadratic([2.0, -1.0]), vec![SeparableTerm::Abs { weight: 1.0 }; 2]).unwrap();
    let x = [0.4, 0.5];
    let g = p.f().full_grad(&x);
    for c in prox_candidates(&x, &g, &p, StepScale::Global(1.0)) {
        let y = x[c.i] + c.d;
        if y == 0.0 {
            assert!(c.s.abs() <= 1.0 + 1e-12);
        } else {
            assert!((c.s - y.signum()).abs() < 1e-12, "{c:?}");
        }
    }
}

#[test]
fn tracked_rules_match_the_pure_versions() {
    let p = Problem::composite(counterexample_quadratic([2.0, -1.0]), vec![SeparableTerm::Abs { weight: 1.0 }; 2]).unwrap();
    let x = [0.4, 0.5];
    for (kind, want) in [(RuleKind::GsR, 0), (RuleKind::GsQ, 1)] {
        let t = tracker_for(&p, &x, kind);
        let mut r = SelectionRule::new(kind, 0);
        r.prepare(&p, Backend::Heap).unwrap();
        assert_eq!(r.select(1, &t).unwrap().index, want, "{kind}");
    }
}

#[test]
fn mi_equals_gsl_on_diagonal_quadratics() {
    let p = Problem::smooth(DenseQuadratic::diagonal(&[1.0, 4.0, 9.0, 0.5], &[1.0, -2.0, 0.3, 3.0]).unwrap());
    let x = [0.0; 4];
    let mi = max_improvement_select(&p, &x).unwrap();
    let g = p.f().full_grad(&x);
    assert_eq!(mi.index, gsl_index(&g, p.f().lipschitz()));
    let t = tracker_for(&p, &x, RuleKind::Mi);
    let mut r = SelectionRule::new(RuleKind::Mi, 0);
    r.prepare(&p, Backend::Heap).unwrap();
    let s = r.select(1, &t).unwrap();
    assert_eq!(s.index, mi.index);
    assert!((s.target.unwrap() - mi.new_value).abs() < 1e-12);
}

#[test]
fn mi_rejects_composites() {
    let p = Problem::composite(counterexample_quadratic([1.0, 1.0]), vec![SeparableTerm::Zero; 2]).unwrap();
    assert!(max_improvement_select(&p, &[0.0, 0.0]).is_err());
    assert!(SelectionRule::new(RuleKind::Mi, 0).prepare(&p, Backend::Heap).is_err());
}

fn small_ls(l2: f64) -> Problem {
    let t = vec![
        (0, 0, 1.0),
        (1, 0, -2.0),
        (1, 1, 0.5),
        (2, 1, 3.0),
        (2, 2, -1.0),
        (0, 2, 0.25),
        (3, 3, 2.0),
        (0, 3, -1.5),
    ];
    let a = SparseMatrix::from_triplets(4, 4, t).unwrap();
    Problem::smooth(LeastSquares::with_convention(a, vec![1.0, -2.0, 0.5, 3.0], l2, ScaleConvention::Half).unwrap())
}

#[test]
fn nns_gsl_agrees_with_scan() {
    let p = small_ls(0.0);
    let x = [0.3, -0.2, 0.1, 0.05];
    let opts = TrackerOptions {
        score: ScoreKind::Gsl,
        backend: Backend::Nns,
        ..TrackerOptions::default()
    };
    let t = Tracker::new(&p, &x, opts).unwrap();
    let mut r = SelectionRule::new(RuleKind::Gsl, 0);
    r.prepare(&p, Backend::Nns).unwrap();
    assert_eq!(r.select(1, &t).unwrap().index, gsl_index(t.grad(), p.f().lipschitz()));
}

#[test]
fn nns_rejects_unsupported_setups() {
    let p = small_ls(0.1);
    assert!(SelectionRule::new(RuleKind::Gsl, 0).prepare(&p, Backend::Nns).is_err());
    assert!(SelectionRule::new(RuleKind::Gs, 0).prepare(&p, Backend::Nns).is_ok());
    assert!(SelectionRule::new(RuleKind::GsQ, 0).prepare(&p, Backend::Nns).is_err());
    let q = Problem::smooth(DenseQuadratic::diagonal(&[1.0], &[0.0]).unwrap());
    assert!(SelectionRule::new(RuleKind::Gs, 0).prepare(&q, Backend::Nns).is_err());
}
