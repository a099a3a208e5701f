use rand::Rng;

use super::SmoothProblem;
use crate::error::{Error, Result};

/// Central differences against `grad_coord` at `x` for each listed
/// coordinate, with `h = 1e-6·(1 + |xᵢ|)` and tolerance `1e-5`.
pub fn check_finite_differences(p: &dyn SmoothProblem, x: &[f64], coords: &[usize]) -> Result<()> {
    let mut y = x.to_vec();
    for &i in coords {
        let h = 1e-6 * (1.0 + x[i].abs());
        y[i] = x[i] + h;
        let fp = p.value(&y);
        y[i] = x[i] - h;
        let fm = p.value(&y);
        y[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        let g = p.grad_coord(x, i);
        if (fd - g).abs() > 1e-5 {
            return Err(Error::CheckFailed(format!(
                "coordinate {i}: finite difference {fd} vs gradient {g}"
            )));
        }
    }
    Ok(())
}

/// `|∇ᵢf(x + αeᵢ) − ∇ᵢf(x)| ≤ Lᵢ|α|` on random `(x, i, α)` with
/// `x ∈ [−1, 1]ⁿ`, `α ∈ [−1, 1]`.
pub fn check_coordinate_lipschitz<R: Rng>(p: &dyn SmoothProblem, rng: &mut R, trials: usize) -> Result<()> {
    let n = p.dim();
    let lips = p.lipschitz();
    for _ in 0..trials {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let i = rng.random_range(0..n);
        let alpha: f64 = rng.random_range(-1.0..1.0);
        let g0 = p.grad_coord(&x, i);
        x[i] += alpha;
        let g1 = p.grad_coord(&x, i);
        if (g1 - g0).abs() > lips[i] * alpha.abs() * (1.0 + 1e-10) {
            return Err(Error::CheckFailed(format!(
                "coordinate {i}: |Δ∇ᵢ| = {} exceeds Lᵢ|α| = {}",
                (g1 - g0).abs(),
                lips[i] * alpha.abs()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::problems::{DenseQuadratic, GraphQuadratic, LeastSquares, Logistic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sparse(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for r in 0..m {
            for c in 0..n {
                if rng.random::<f64>() < 0.3 {
                    t.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
        }
        for c in 0..n {
            t.push((c % m, c, 1.5));
        }
        SparseMatrix::from_triplets(m, n, t).unwrap()
    }

    fn all_problems(seed: u64) -> Vec<Box<dyn SmoothProblem>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sparse(&mut rng, 12, 7);
        let b: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..12).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut h = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                h[i * 4 + j] = if i == j { 3.0 } else { 0.5 / (1 + i + j) as f64 };
            }
        }
        let edges: Vec<(usize, usize, f64)> = (0..7).map(|u| (u, u + 1, rng.random_range(0.5..2.0))).collect();
        vec![
            Box::new(LeastSquares::new(a.clone(), b, 0.1, 0.5 / 12.0).unwrap()),
            Box::new(Logistic::new(a, y, 0.01).unwrap()),
            Box::new(DenseQuadratic::new(4, h, vec![0.1, 0.2, -0.3, 0.0]).unwrap()),
            Box::new(GraphQuadratic::new(8, &edges, &[(0, 1.0), (7, -1.0)], &[]).unwrap()),
        ]
    }

    #[test]
    fn every_problem_passes_both_checks() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            for p in all_problems(seed) {
                let x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let coords: Vec<usize> = (0..p.dim()).collect();
                check_finite_differences(p.as_ref(), &x, &coords).unwrap();
                check_coordinate_lipschitz(p.as_ref(), &mut rng, 100).unwrap();
                let g = p.full_grad(&x);
                for (i, gi) in g.iter().enumerate() {
                    assert!((gi - p.grad_coord(&x, i)).abs() < 1e-12);
                }
                if let Some(h) = p.hessian_dense() {
                    let n = p.dim();
                    for i in 0..n {
                        assert!((h[i * n + i] - p.lipschitz()[i]).abs() <= 1e-12 * h[i * n + i]);
                    }
                }
            }
        }
    }

    #[test]
    fn detects_a_wrong_lipschitz_constant() {
        #[derive(Debug)]
        struct Liar(Vec<f64>);
        impl SmoothProblem for Liar {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn grad_coord(&self, x: &[f64], _: usize) -> f64 {
                2.0 * x[0]
            }
            fn full_grad(&self, x: &[f64]) -> Vec<f64> {
                vec![2.0 * x[0]]
            }
            fn lipschitz(&self) -> &[f64] {
                &self.0
            }
            fn is_quadratic(&self) -> bool {
                true
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(check_coordinate_lipschitz(&Liar(vec![1.0]), &mut rng, 100).is_err());
        assert!(check_coordinate_lipschitz(&Liar(vec![2.0]), &mut rng, 100).is_ok());
    }
}
