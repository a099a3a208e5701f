use super::{check_dim, validate_lipschitz, LinearModel, SmoothProblem};
use crate::error::{Error, Result};
use crate::linalg::{dot, SparseMatrix};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;

/// `(1/m) Σ_r log(1 + exp(−b_r a_rᵀx)) + (λ/2)‖x‖²` with labels `b_r = ±1`.
#[derive(Debug, Clone)]
pub struct Logistic {
    a: SparseMatrix,
    labels: Vec<f64>,
    l2: f64,
    lips: Vec<f64>,
}

/// `log(1 + eᵗ)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(a: SparseMatrix, labels: Vec<f64>, l2: f64) -> Result<Self> {
        check_dim(a.nrows(), labels.len())?;
        if let Some(r) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid(format!("label {r} is {}, expected ±1", labels[r])));
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::invalid(format!("l2 = {l2}")));
        }
        let m = a.nrows() as f64;
        let lips: Vec<f64> = (0..a.ncols()).map(|j| 0.25 / m * a.col_norm_sq(j) + l2).collect();
        validate_lipschitz(&lips)?;
        Ok(Self { a, labels, l2, lips })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn inv_m(&self) -> f64 {
        1.0 / self.a.nrows() as f64
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x).expect("dimension checked by caller")
    }

    /// Value, derivative and curvature of the slice `t ↦ f(x + (t − xᵢ)eᵢ)`,
    /// dropping the rows that do not touch column `i`.
    fn slice(&self, ax: &[f64], i: usize, xi: f64, t: f64) -> (f64, f64, f64) {
        let (rows, vals) = self.a.col(i);
        let delta = t - xi;
        let (mut v, mut d, mut c) = (0.0, 0.0, 0.0);
        for (&r, &a) in rows.iter().zip(vals) {
            let y = self.labels[r];
            let z = ax[r] + a * delta;
            v += softplus(-y * z);
            let s = sigmoid(-y * z);
            d += -y * a * s;
            c += a * a * s * (1.0 - s);
        }
        let im = self.inv_m();
        (
            im * v + 0.5 * self.l2 * t * t,
            im * d + self.l2 * t,
            im * c + self.l2,
        )
    }

    /// Safeguarded Newton on the coordinate slice; never returns a point worse
    /// than the `1/Lᵢ` step.
    fn newton_step(&self, ax: &[f64], x: &[f64], i: usize, g: f64) -> f64 {
        let xi = x[i];
        if g == 0.0 {
            return xi;
        }
        let li = self.lips[i];
        let safe = xi - g / li;
        let (f_safe, d_safe, _) = self.slice(ax, i, xi, safe);
        if d_safe == 0.0 || d_safe.signum() != g.signum() {
            return safe;
        }
        // φ' keeps the sign of g up to `safe`; expand until it flips.
        let dir = -g.signum();
        let mut inner = safe;
        let mut width = (g / li).abs().max(1e-12);
        let mut outer = None;
        for _ in 0..64 {
            let cand = inner + dir * width;
            let (_, d, _) = self.slice(ax, i, xi, cand);
            if d == 0.0 {
                return cand;
            }
            if d.signum() != g.signum() {
                outer = Some(cand);
                break;
            }
            inner = cand;
            width *= 2.0;
        }
        let Some(outer) = outer else {
            // no finite minimizer along this coordinate
            return inner;
        };
        let (mut lo, mut hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
        let mut t = 0.5 * (lo + hi);
        for _ in 0..NEWTON_MAX_ITERS {
            let (_, d, c) = self.slice(ax, i, xi, t);
            if d.abs() <= NEWTON_TOL {
                break;
            }
            // φ' is increasing: d > 0 means the root is to the left.
            if d > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - d / c;
            t = if c > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * (1.0 + t.abs()) {
                break;
            }
        }
        let (f_t, _, _) = self.slice(ax, i, xi, t);
        if f_t <= f_safe {
            t
        } else {
            safe
        }
    }
}

impl SmoothProblem for Logistic {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ax = self.ax(x);
        let loss: f64 = ax.iter().zip(&self.labels).map(|(z, y)| softplus(-y * z)).sum();
        self.inv_m() * loss + 0.5 * self.l2 * dot(x, x)
    }

    fn grad_coord(&self, x: &[f64], i: usize) -> f64 {
        let ax = self.ax(x);
        let (rows, vals) = self.a.col(i);
        let s: f64 = rows
            .iter()
            .zip(vals)
            .map(|(&r, &v)| v * self.link_grad(r, ax[r]))
            .sum();
        s + self.l2 * x[i]
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.ax(x);
        let r: Vec<f64> = ax.iter().enumerate().map(|(row, &z)| self.link_grad(row, z)).collect();
        let mut g = self.a.t_mul_vec(&r).expect("shape");
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += self.l2 * xi;
        }
        g
    }

    fn lipschitz(&self) -> &[f64] {
        &self.lips
    }

    fn is_quadratic(&self) -> bool {
        false
    }

    fn exact_step(&self, x: &[f64], i: usize, grad_i: f64, ax: Option<&[f64]>) -> f64 {
        match ax {
            Some(ax) => self.newton_step(ax, x, i, grad_i),
            None => self.newton_step(&self.ax(x), x, i, grad_i),
        }
    }

    fn linear_model(&self) -> Option<&dyn LinearModel> {
        Some(self)
    }
}

impl LinearModel for Logistic {
    fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    fn link_value(&self, row: usize, z: f64) -> f64 {
        self.inv_m() * softplus(-self.labels[row] * z)
    }

    fn link_grad(&self, row: usize, z: f64) -> f64 {
        let y = self.labels[row];
        -y * sigmoid(-y * z) * self.inv_m()
    }

    fn node_value(&self, _i: usize, xi: f64) -> f64 {
        0.5 * self.l2 * xi * xi
    }

    fn node_grad(&self, _i: usize, xi: f64) -> f64 {
        self.l2 * xi
    }

    fn has_node_terms(&self) -> bool {
        self.l2 != 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::exact_coord_min;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, l2: f64) -> Logistic {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (30, 8);
        let mut t = Vec::new();
        for r in 0..m {
            for c in 0..n {
                if rng.random::<f64>() < 0.5 {
                    t.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
            t.push((r, r % n, 1.0));
        }
        let a = SparseMatrix::from_triplets(m, n, t).unwrap();
        let y = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        Logistic::new(a, y, l2).unwrap()
    }

    #[test]
    fn stable_for_large_margins() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(sigmoid(-800.0), 0.0);
    }

    #[test]
    fn exact_step_is_first_order_optimal_and_beats_the_safe_step() {
        for seed in 0..20 {
            let p = random(seed, if seed % 2 == 0 { 0.0 } else { 0.01 });
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            for i in 0..p.dim() {
                let g = p.grad_coord(&x, i);
                let mut y = x.clone();
                y[i] = exact_coord_min(&p, &x, i);
                let gnorm = p.full_grad(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(p.grad_coord(&y, i).abs() <= 1e-9 * (1.0 + gnorm), "seed {seed} i {i}");
                let bound = p.value(&x) - g * g / (2.0 * p.lipschitz()[i]);
                assert!(p.value(&y) <= bound + 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_binary_labels() {
        let a = SparseMatrix::identity(2);
        assert!(Logistic::new(a, vec![1.0, 0.0], 0.0).is_err());
    }
}
