//! Self-expressive coding: every sample is written as a sparse combination
//! of the *other* samples, giving an `n x n` coefficient matrix with zero
//! diagonal.
//!
//! The joint problem separates into one problem per column, so columns are
//! solved independently (in parallel) against a shared Gram matrix.

mod lasso;
mod omp;

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;

pub use lasso::{lasso_column, lasso_objective, soft_threshold, LassoSolution};
pub use omp::{omp_column, OmpSolution};

pub const DEFAULT_LAMBDA: f64 = 0.3;
pub const DEFAULT_DENOISE_EPS: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodingMethod {
    Lasso,
    Omp,
}

impl fmt::Display for CodingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodingMethod::Lasso => "lasso",
            CodingMethod::Omp => "omp",
        })
    }
}

impl FromStr for CodingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(CodingMethod::Lasso),
            "omp" => Ok(CodingMethod::Omp),
            _ => Err(Error::Parameter(format!("unknown coding method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodingConfig {
    pub method: CodingMethod,
    pub lambda: f64,
    /// OMP atom budget.
    pub sparsity_k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub denoise_eps: f64,
}

impl Default for SparseCodingConfig {
    fn default() -> Self {
        SparseCodingConfig {
            method: CodingMethod::Lasso,
            lambda: DEFAULT_LAMBDA,
            sparsity_k: 10,
            max_iter: 10_000,
            tol: 1e-7,
            denoise_eps: DEFAULT_DENOISE_EPS,
        }
    }
}

impl SparseCodingConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        if !(self.denoise_eps >= 0.0) {
            return Err(Error::Parameter(format!(
                "denoise_eps must be >= 0, got {}",
                self.denoise_eps
            )));
        }
        if self.method == CodingMethod::Omp && (self.sparsity_k == 0 || self.sparsity_k >= n) {
            return Err(Error::Parameter(format!(
                "OMP sparsity budget {} must satisfy 1 <= k < n = {n}",
                self.sparsity_k
            )));
        }
        Ok(())
    }
}

/// Column `j` of `y` holds the coefficients that rebuild sample `j` from the
/// others; `y[[j, j]] == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub y: Array2<f64>,
    pub lambda: f64,
    pub denoise_eps: f64,
    /// Columns whose solver stopped on `max_iter` (LASSO) or on a
    /// rank-deficient active set (OMP).
    pub unconverged: usize,
}

impl CoefficientMatrix {
    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn denoise(mut self) -> Self {
        denoise(&mut self.y, self.denoise_eps);
        self
    }
}

/// Zeroes entries with `|v| < eps`.
pub fn denoise(y: &mut Array2<f64>, eps: f64) {
    y.mapv_inplace(|v| if v.abs() < eps { 0.0 } else { v });
}

pub fn self_express(features: &FeatureMatrix, cfg: &SparseCodingConfig) -> Result<CoefficientMatrix> {
    let gram = features.gram();
    self_express_with_gram(features, gram.view(), cfg)
}

/// Same as [`self_express`] with a caller-supplied `S^T S`.
pub fn self_express_with_gram(
    features: &FeatureMatrix,
    gram: ArrayView2<f64>,
    cfg: &SparseCodingConfig,
) -> Result<CoefficientMatrix> {
    let n = features.n();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "self-expression needs at least 2 samples, got {n}"
        )));
    }
    if gram.dim() != (n, n) {
        return Err(Error::Parameter(format!(
            "Gram matrix is {:?}, expected {n}x{n}",
            gram.dim()
        )));
    }
    cfg.validate(n)?;

    let columns: Vec<(Vec<f64>, bool)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let xty = gram.column(j);
            match cfg.method {
                CodingMethod::Lasso => {
                    let sol = lasso::lasso_gram(gram, xty, Some(j), cfg.lambda, cfg.max_iter, cfg.tol);
                    (sol.coef.to_vec(), sol.converged)
                }
                CodingMethod::Omp => {
                    let sol = omp::omp_gram(
                        gram,
                        xty,
                        |a| features.column(a),
                        features.column(j),
                        Some(j),
                        cfg.sparsity_k,
                        cfg.tol,
                    );
                    (sol.coef.to_vec(), !sol.rank_deficient)
                }
            }
        })
        .collect();

    let mut y = Array2::zeros((n, n));
    let mut unconverged = 0;
    for (j, (coef, ok)) in columns.into_iter().enumerate() {
        y.column_mut(j).assign(&ndarray::ArrayView1::from(&coef));
        y[[j, j]] = 0.0;
        unconverged += usize::from(!ok);
    }
    if unconverged > 0 {
        warn!("{unconverged} of {n} {} columns did not converge", cfg.method);
    }
    Ok(CoefficientMatrix {
        y,
        lambda: cfg.lambda,
        denoise_eps: cfg.denoise_eps,
        unconverged,
    }
    .denoise())
}
