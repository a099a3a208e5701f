use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for c in 0..n {
        t.push((rng.random_range(0..m), c, 1.0 + rng.random::<f64>()));
        for r in 0..m {
            if rng.random::<f64>() < density {
                t.push((r, c, rng.sample::<f64, _>(StandardNormal) * (1.0 + c as f64 / n as f64)));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, t).unwrap()
}

fn scan_nearest(idx: &BallTree, r: &[f64]) -> f64 {
    (0..idx.num_points())
        .map(|p| dist_sq(r, idx.point(p)).sqrt())
        .fold(f64::INFINITY, f64::min)
}

fn brute_biased(a: &SparseMatrix, r: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..a.ncols() {
        let (rows, vals) = a.col(j);
        let ip: f64 = rows.iter().zip(vals).map(|(&k, &v)| v * r[k]).sum();
        let s = ip.abs() - 0.5 * a.col_norm_sq(j);
        if s > best.1 {
            best = (j, s);
        }
    }
    best.0
}

#[test]
fn single_column_gives_two_points() {
    let a = SparseMatrix::from_dense(2, 1, &[3.0, 4.0]).unwrap();
    let idx = BallTree::build(&a, false, DEFAULT_LEAF_SIZE).unwrap();
    assert_eq!(idx.num_points(), 2);
    assert_eq!(idx.point(1), &[-3.0, -4.0][..]);
    assert_eq!(query_gs_biased(&idx, &[-1.0, 0.0]).unwrap(), 0);
}

#[test]
fn normalized_points_lie_on_the_unit_sphere() {
    let a = SparseMatrix::from_dense(2, 2, &[0.0, 2.0, 5.0, 0.0]).unwrap();
    let idx = BallTree::build(&a, true, 1).unwrap();
    for p in 0..4 {
        assert!((dot(idx.point(p), idx.point(p)) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn zero_column_cannot_be_normalized() {
    let a = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (1, 2, 1.0)]).unwrap();
    assert!(matches!(BallTree::build(&a, true, 4), Err(Error::ZeroColumn(1))));
    assert!(BallTree::build(&a, false, 4).is_ok());
}

#[test]
fn exact_search_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_matrix(&mut rng, 100, 50, 0.1);
    for &(normalized, leaf) in &[(false, 16), (true, 16), (false, 1), (true, 3)] {
        let idx = BallTree::build(&a, normalized, leaf).unwrap();
        assert!(idx.is_consistent());
        for _ in 0..100 {
            let r: Vec<f64> = (0..100).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let (_, d) = idx.nearest(&r).unwrap();
            assert!((d - scan_nearest(&idx, &r)).abs() <= 1e-12 * (1.0 + d));
        }
    }
}

#[test]
fn biased_query_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_matrix(&mut rng, 40, 60, 0.15);
    let idx = BallTree::build(&a, false, 8).unwrap();
    for _ in 0..200 {
        let s: f64 = rng.random_range(0.01..5.0);
        let r: Vec<f64> = (0..40).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
        assert_eq!(query_gs_biased(&idx, &r).unwrap(), brute_biased(&a, &r));
    }
}

#[test]
fn unit_columns_make_biased_query_exact_gs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 30;
    let dense: Vec<f64> = (0..m * 20).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let a = SparseMatrix::from_dense(m, 20, &dense).unwrap();
    let mut t = Vec::new();
    for j in 0..20 {
        let norm = a.col_norm_sq(j).sqrt();
        let (rows, vals) = a.col(j);
        t.extend(rows.iter().zip(vals).map(|(&r, &v)| (r, j, v / norm)));
    }
    let unit = SparseMatrix::from_triplets(m, 20, t).unwrap();
    let idx = BallTree::build(&unit, false, 4).unwrap();
    for _ in 0..50 {
        let r: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g = unit.t_mul_vec(&r).unwrap();
        let gs = crate::tracker::scan_argmax(&g.iter().map(|v| v.abs()).collect::<Vec<_>>()).0;
        assert_eq!(query_gs_biased(&idx, &r).unwrap(), gs);
    }
}

#[test]
fn zero_residual_picks_the_shortest_column() {
    let a = SparseMatrix::from_dense(1, 4, &[3.0, 1.0, -1.0, 2.0]).unwrap();
    let idx = BallTree::build(&a, false, 1).unwrap();
    assert_eq!(query_gs_biased(&idx, &[0.0]).unwrap(), 1);
}

#[test]
fn duplicate_columns_tie_to_the_smallest_index() {
    let a = SparseMatrix::from_dense(2, 3, &[1.0, 0.5, 1.0, 2.0, 0.1, 2.0]).unwrap();
    let idx = BallTree::build(&a, true, 1).unwrap();
    assert_eq!(query_gsl_exact(&idx, &[1.0, 2.0]).unwrap(), 0);
    assert_eq!(query_gsl_exact(&idx, &[-1.0, -2.0]).unwrap(), 0);
}

#[test]
fn wrong_index_kind_is_rejected() {
    let a = SparseMatrix::identity(2);
    let un = BallTree::build(&a, false, 2).unwrap();
    let no = BallTree::build(&a, true, 2).unwrap();
    assert!(query_gsl_exact(&un, &[1.0, 0.0]).is_err());
    assert!(query_gs_biased(&no, &[1.0, 0.0]).is_err());
    assert!(un.nearest(&[1.0]).is_err());
}
