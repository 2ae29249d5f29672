use ndarray::{Array1, ArrayView1, ArrayView2};

/// Outcome of one LASSO solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub coef: Array1<f64>,
    /// False when `max_iter` sweeps ran out before the largest coordinate
    /// change fell below `tol`; `coef` is then the last (and best) iterate.
    pub converged: bool,
    pub sweeps: usize,
}

#[inline]
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// `0.5 * ||target - dictionary @ coef||^2 + lambda * ||coef||_1`
pub fn lasso_objective(
    dictionary: ArrayView2<f64>,
    target: ArrayView1<f64>,
    coef: ArrayView1<f64>,
    lambda: f64,
) -> f64 {
    let r = &target - &dictionary.dot(&coef);
    0.5 * r.dot(&r) + lambda * coef.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for
/// `min_y 0.5 ||s - X y||^2 + lambda ||y||_1`, posed through the Gram matrix
/// `G = X^T X` and the correlations `X^T s`.
///
/// Coordinate `exclude`, if given, is pinned at zero. The solver keeps
/// `c = X^T r` up to date, so coordinate `j` updates as
/// `y_j <- soft(c_j + G_jj y_j, lambda) / G_jj`. Between full sweeps it
/// cycles over the nonzero coordinates only; convergence is declared when a
/// full sweep moves no coordinate by `tol` or more. Every pass, full or
/// restricted, counts against `max_iter`.
pub(crate) fn lasso_gram(
    gram: ArrayView2<f64>,
    xty: ArrayView1<f64>,
    exclude: Option<usize>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> LassoSolution {
    let n = xty.len();
    let mut y = Array1::<f64>::zeros(n);
    let mut corr = xty.to_owned();
    let mut sweeps = 0;
    let mut converged = false;
    let all: Vec<usize> = (0..n).filter(|&j| Some(j) != exclude && gram[[j, j]] > 0.0).collect();
    let mut active: Vec<usize> = Vec::new();

    let pass = |coords: &[usize], y: &mut Array1<f64>, corr: &mut Array1<f64>| {
        let mut max_change = 0.0f64;
        for &j in coords {
            let gjj = gram[[j, j]];
            let old = y[j];
            let new = soft_threshold(corr[j] + gjj * old, lambda) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                y[j] = new;
                corr.scaled_add(-delta, &gram.row(j));
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    };

    while sweeps < max_iter {
        sweeps += 1;
        if pass(&all, &mut y, &mut corr) < tol {
            converged = true;
            break;
        }
        active.clear();
        active.extend(all.iter().copied().filter(|&j| y[j] != 0.0));
        while sweeps < max_iter {
            sweeps += 1;
            if pass(&active, &mut y, &mut corr) < tol {
                break;
            }
        }
    }
    LassoSolution {
        coef: y,
        converged,
        sweeps,
    }
}

/// Solves one LASSO problem against an explicit `d x m` dictionary.
pub fn lasso_column(
    dictionary: ArrayView2<f64>,
    target: ArrayView1<f64>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> LassoSolution {
    let gram = dictionary.t().dot(&dictionary);
    let xty = dictionary.t().dot(&target);
    lasso_gram(gram.view(), xty.view(), None, lambda, max_iter, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit_dictionary(d: usize, m: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::<f64>::from_shape_fn((d, m), |_| rng.random_range(-1.0..1.0));
        for mut c in x.columns_mut() {
            let n = c.dot(&c).sqrt();
            c /= n;
        }
        x
    }

    /// FISTA reference solver; independent of the coordinate-descent path.
    fn proximal_gradient(x: &Array2<f64>, s: &Array1<f64>, lambda: f64, iters: usize) -> Array1<f64> {
        let g = x.t().dot(x);
        // Lipschitz constant via power iteration
        let mut v = Array1::from_elem(g.nrows(), 1.0);
        let mut lip = 0.0;
        for _ in 0..500 {
            let w = g.dot(&v);
            lip = w.dot(&w).sqrt();
            v = w / lip;
        }
        let step = 1.0 / (lip * 1.0001);
        let xts = x.t().dot(s);
        let mut y = Array1::zeros(g.nrows());
        let mut z = y.clone();
        let mut t = 1.0f64;
        for _ in 0..iters {
            let grad = g.dot(&z) - &xts;
            let y_next = (&z - &(grad * step)).mapv(|v| soft_threshold(v, lambda * step));
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            z = &y_next + &((&y_next - &y) * ((t - 1.0) / t_next));
            y = y_next;
            t = t_next;
        }
        y
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(1.0, 0.3), 0.7);
        assert_eq!(soft_threshold(-1.0, 0.3), -0.7);
        assert_eq!(soft_threshold(0.2, 0.3), 0.0);
        assert_eq!(soft_threshold(0.3, 0.3), 0.0);
    }

    #[test]
    fn orthogonal_target_gives_zero() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let s = array![0.0, 0.0, 2.0];
        let sol = lasso_column(x.view(), s.view(), 0.3, 100, 1e-10);
        assert!(sol.converged);
        assert!(sol.coef.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lambda_max_gives_zero() {
        let x = random_unit_dictionary(6, 9, 3);
        let s = random_unit_dictionary(6, 1, 4).column(0).to_owned();
        let lmax = x.t().dot(&s).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sol = lasso_column(x.view(), s.view(), lmax, 100, 1e-10);
        assert!(sol.coef.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_proximal_gradient_reference() {
        let x = random_unit_dictionary(5, 8, 11);
        let s = random_unit_dictionary(5, 1, 12).column(0).to_owned();
        let sol = lasso_column(x.view(), s.view(), 0.3, 100_000, 1e-12);
        assert!(sol.converged);
        let reference = proximal_gradient(&x, &s, 0.3, 1_000_000);
        let a = lasso_objective(x.view(), s.view(), sol.coef.view(), 0.3);
        let b = lasso_objective(x.view(), s.view(), reference.view(), 0.3);
        assert!((a - b).abs() < 1e-8, "cd {a} vs reference {b}");
    }

    #[test]
    fn objective_non_increasing_across_sweeps() {
        let x = random_unit_dictionary(10, 15, 21);
        let s = random_unit_dictionary(10, 1, 22).column(0).to_owned();
        let mut prev = f64::INFINITY;
        for sweeps in 1..30 {
            let sol = lasso_column(x.view(), s.view(), 0.1, sweeps, 0.0);
            let obj = lasso_objective(x.view(), s.view(), sol.coef.view(), 0.1);
            assert!(obj <= prev + 1e-15, "sweep {sweeps}: {obj} > {prev}");
            prev = obj;
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let x = random_unit_dictionary(10, 15, 5);
        let s = random_unit_dictionary(10, 1, 6).column(0).to_owned();
        let sol = lasso_column(x.view(), s.view(), 0.01, 1, 1e-300);
        assert!(!sol.converged);
        assert_eq!(sol.sweeps, 1);
    }

    #[test]
    fn excluded_coordinate_stays_zero() {
        let x = random_unit_dictionary(4, 5, 8);
        let g = x.t().dot(&x);
        let xty = g.column(2).to_owned();
        let sol = lasso_gram(g.view(), xty.view(), Some(2), 0.05, 1000, 1e-10);
        assert_eq!(sol.coef[2], 0.0);
    }
}
