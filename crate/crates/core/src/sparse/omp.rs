use ndarray::{Array1, ArrayView1, ArrayView2};

/// Outcome of one OMP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpSolution {
    pub coef: Array1<f64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    pub residual_norm: f64,
    /// Set when the next atom was linearly dependent on the active set and
    /// selection stopped before the sparsity budget.
    pub rank_deficient: bool,
}

/// Lower-triangular Cholesky factor of the active-set Gram matrix, grown one
/// atom at a time.
struct GrowingCholesky {
    rows: Vec<Vec<f64>>,
}

impl GrowingCholesky {
    /// Tries to append an atom whose Gram column against the active set is
    /// `cross` and whose squared norm is `diag`. Returns false when the atom
    /// is (numerically) in the span of the active set.
    fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        let k = self.rows.len();
        let mut w = vec![0.0; k];
        for i in 0..k {
            let s: f64 = (0..i).map(|m| self.rows[i][m] * w[m]).sum();
            w[i] = (cross[i] - s) / self.rows[i][i];
        }
        let d2 = diag - w.iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 1e-12 * diag.max(f64::MIN_POSITIVE)) {
            return false;
        }
        w.push(d2.sqrt());
        self.rows.push(w);
        true
    }

    /// Solves `L L^T x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.rows.len();
        let mut z = vec![0.0; k];
        for i in 0..k {
            let s: f64 = (0..i).map(|m| self.rows[i][m] * z[m]).sum();
            z[i] = (b[i] - s) / self.rows[i][i];
        }
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|m| self.rows[m][i] * x[m]).sum();
            x[i] = (z[i] - s) / self.rows[i][i];
        }
        x
    }
}

/// Orthogonal matching pursuit. Correlations come from the Gram matrix
/// (`c = X^T s - G[:, A] y_A`); the residual norm used for the stopping test
/// is computed explicitly from the atoms.
#[allow(clippy::too_many_arguments)]
pub(crate) fn omp_gram<'a>(
    gram: ArrayView2<f64>,
    xty: ArrayView1<f64>,
    atom: impl Fn(usize) -> ArrayView1<'a, f64>,
    target: ArrayView1<f64>,
    exclude: Option<usize>,
    sparsity_k: usize,
    tol: f64,
) -> OmpSolution {
    let m = xty.len();
    let mut support: Vec<usize> = Vec::with_capacity(sparsity_k);
    let mut active_coef: Vec<f64> = Vec::new();
    let mut chol = GrowingCholesky { rows: Vec::new() };
    let mut residual = target.to_owned();
    let mut residual_norm = residual.dot(&residual).sqrt();
    let mut rank_deficient = false;

    while support.len() < sparsity_k && residual_norm >= tol {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if Some(j) == exclude || support.contains(&j) {
                continue;
            }
            let c: f64 = xty[j]
                - support
                    .iter()
                    .zip(&active_coef)
                    .map(|(&a, y)| gram[[j, a]] * y)
                    .sum::<f64>();
            // strict comparison keeps the lowest index on ties
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((pick, score)) = best else { break };
        if score < tol {
            break;
        }
        let cross: Vec<f64> = support.iter().map(|&a| gram[[a, pick]]).collect();
        if !chol.push(&cross, gram[[pick, pick]]) {
            rank_deficient = true;
            break;
        }
        support.push(pick);
        let rhs: Vec<f64> = support.iter().map(|&a| xty[a]).collect();
        active_coef = chol.solve(&rhs);

        residual.assign(&target);
        for (&a, &y) in support.iter().zip(&active_coef) {
            residual.scaled_add(-y, &atom(a));
        }
        residual_norm = residual.dot(&residual).sqrt();
    }

    let mut coef = Array1::zeros(m);
    for (&a, &y) in support.iter().zip(&active_coef) {
        coef[a] = y;
    }
    OmpSolution {
        coef,
        support,
        residual_norm,
        rank_deficient,
    }
}

/// OMP against an explicit `d x m` dictionary.
pub fn omp_column(dictionary: ArrayView2<f64>, target: ArrayView1<f64>, sparsity_k: usize, tol: f64) -> OmpSolution {
    let gram = dictionary.t().dot(&dictionary);
    let xty = dictionary.t().dot(&target);
    omp_gram(
        gram.view(),
        xty.view(),
        |j| dictionary.column(j),
        target,
        None,
        sparsity_k,
        tol,
    )
}
