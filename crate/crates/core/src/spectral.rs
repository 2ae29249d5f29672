//! Affinity construction and random-walk spectral clustering.
//!
//! The generalized problem `L_rw v = lambda v`, `L_rw = I - D^-1 A`, is solved
//! through `L_sym = I - D^-1/2 A D^-1/2`: if `L_sym u = lambda u` then
//! `v = D^-1/2 u`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::preprocess::FeatureMatrix;
use crate::sparse::CoefficientMatrix;

/// Symmetric, nonnegative, finite pairwise weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(Array2<f64>);

impl AffinityMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (n, m) = a.dim();
        if n != m {
            return Err(Error::Validation(format!("affinity matrix is {n}x{m}, not square")));
        }
        for i in 0..n {
            for j in 0..n {
                let v = a[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "affinity entry ({i},{j}) = {v} is not a finite nonnegative weight"
                    )));
                }
                if v != a[[j, i]] {
                    return Err(Error::Validation(format!(
                        "affinity matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(AffinityMatrix(a))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Row sums, diagonal excluded.
    pub fn degrees(&self) -> Array1<f64> {
        let n = self.n();
        Array1::from_shape_fn(n, |i| (0..n).filter(|&j| j != i).map(|j| self.0[[i, j]]).sum())
    }

    /// Nodes with zero degree.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Principal submatrix on `indices`.
    pub fn select(&self, indices: &[usize]) -> AffinityMatrix {
        AffinityMatrix(self.0.select(Axis(0), indices).select(Axis(1), indices))
    }
}

/// `A = |Y| + |Y|^T` with a zero diagonal.
pub fn affinity_from_coefficients(y: &CoefficientMatrix) -> AffinityMatrix {
    let n = y.n();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let v = y.y[[i, j]].abs() + y.y[[j, i]].abs();
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    AffinityMatrix(a)
}

/// Cosine affinity: `max(cos, 0)` off the diagonal, zero on it.
pub fn affinity_from_cosine_matrix(cosine: &Array2<f64>) -> AffinityMatrix {
    let n = cosine.nrows();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let v = cosine[[i, j]].max(0.0);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    AffinityMatrix(a)
}

pub fn affinity_from_cosine(features: &FeatureMatrix) -> AffinityMatrix {
    affinity_from_cosine_matrix(&features.cosine_matrix())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `n x k`; row `i` embeds sample `i`.
    pub coords: Array2<f64>,
    /// The `k` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

/// `L_sym = I - D^-1/2 A D^-1/2`, diagonal of `A` ignored.
pub fn normalized_laplacian(a: &AffinityMatrix) -> Result<Array2<f64>> {
    let isolated = a.isolated_nodes();
    if !isolated.is_empty() {
        return Err(Error::Validation(format!(
            "affinity has {} isolated node(s) (first: {}); route them to the outlier set before spectral clustering",
            isolated.len(),
            isolated[0]
        )));
    }
    let inv_sqrt: Array1<f64> = a.degrees().mapv(|d| 1.0 / d.sqrt());
    let n = a.n();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            1.0
        } else {
            -inv_sqrt[i] * a.0[[i, j]] * inv_sqrt[j]
        }
    }))
}

/// Full ascending eigendecomposition of a symmetric matrix: `(values, vectors)`
/// with eigenvectors as columns.
pub(crate) fn symmetric_eigen(m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Spectral embedding from the `k` smallest random-walk eigenvectors.
pub fn embed(a: &AffinityMatrix, k: usize) -> Result<SpectralEmbedding> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("embedding dimension {k} must lie in 1..={n}")));
    }
    let lsym = normalized_laplacian(a)?;
    let (values, vectors) = symmetric_eigen(&lsym)?;
    let inv_sqrt: Array1<f64> = a.degrees().mapv(|d| 1.0 / d.sqrt());

    let mut coords = Array2::zeros((n, k));
    for c in 0..k {
        let u = vectors.column(c);
        // sign convention: largest-magnitude entry positive
        let lead = u
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[[i, c]] = sign * u[i] * inv_sqrt[i];
        }
    }
    Ok(SpectralEmbedding {
        coords,
        eigenvalues: values[..k].to_vec(),
    })
}

/// Labels from k-means on the spectral embedding, together with the
/// embedding itself.
pub fn spectral_cluster_with_embedding(
    a: &AffinityMatrix,
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, SpectralEmbedding)> {
    let emb = embed(a, k)?;
    let km = kmeans(emb.coords.view(), &KMeansConfig::new(k, seed))?;
    Ok((km.labels, emb))
}

pub fn spectral_cluster(a: &AffinityMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    spectral_cluster_with_embedding(a, k, seed).map(|(labels, _)| labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CoefficientMatrix;
    use ndarray::array;

    fn coeffs(y: Array2<f64>) -> CoefficientMatrix {
        CoefficientMatrix {
            y,
            lambda: 0.3,
            denoise_eps: 0.001,
            unconverged: 0,
        }
    }

    fn blocks(sizes: &[usize]) -> AffinityMatrix {
        let n: usize = sizes.iter().sum();
        let mut owner = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, s));
        }
        AffinityMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| {
            if i != j && owner[i] == owner[j] {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap()
    }

    #[test]
    fn coefficient_affinity_examples() {
        let a = affinity_from_coefficients(&coeffs(array![[0.0, 0.7], [0.7, 0.0]]));
        assert_eq!(a.as_array(), &array![[0.0, 1.4], [1.4, 0.0]]);
        let a = affinity_from_coefficients(&coeffs(Array2::zeros((3, 3))));
        assert!(a.as_array().iter().all(|v| *v == 0.0));
        let a = affinity_from_coefficients(&coeffs(array![[0.0, -0.2], [0.5, 0.0]]));
        assert_eq!(a.as_array(), &array![[0.0, 0.7], [0.7, 0.0]]);
    }

    #[test]
    fn cosine_affinity_examples() {
        let a = affinity_from_cosine_matrix(&array![[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(a.as_array(), &array![[0.0, 1.0], [1.0, 0.0]]);
        let a = affinity_from_cosine_matrix(&array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(a.as_array().iter().all(|v| *v == 0.0));
        let a = affinity_from_cosine_matrix(&array![[1.0, -1.0], [-1.0, 1.0]]);
        assert!(a.as_array().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn affinity_validation() {
        assert!(AffinityMatrix::new(array![[0.0, 1.0], [0.5, 0.0]]).is_err());
        assert!(AffinityMatrix::new(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(AffinityMatrix::new(Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn two_cliques_piecewise_constant() {
        let a = blocks(&[3, 3]);
        let e = embed(&a, 2).unwrap();
        assert!(e.eigenvalues.iter().all(|v| v.abs() < 1e-12));
        for c in 0..2 {
            for block in [0..3, 3..6] {
                let vals: Vec<f64> = block.map(|i| e.coords[[i, c]]).collect();
                assert!(vals.iter().all(|v| (v - vals[0]).abs() < 1e-12));
            }
        }
        let labels = spectral_cluster(&a, 2, 0).unwrap();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[0], labels[2]);
        assert_eq!(labels[3], labels[5]);
        assert_ne!(labels[0], labels[3]);
    }

    #[test]
    fn complete_graph_constant_first_vector() {
        let a = blocks(&[5]);
        let e = embed(&a, 1).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-12);
        let first = e.coords[[0, 0]];
        assert!(e.coords.column(0).iter().all(|v| (v - first).abs() < 1e-12));
        assert_eq!(spectral_cluster(&a, 1, 3).unwrap(), vec![0; 5]);
    }

    #[test]
    fn random_walk_eigen_equation_holds() {
        let a = AffinityMatrix::new(array![
            [0.0, 1.0, 0.2, 0.0],
            [1.0, 0.0, 0.5, 0.1],
            [0.2, 0.5, 0.0, 2.0],
            [0.0, 0.1, 2.0, 0.0]
        ])
        .unwrap();
        let e = embed(&a, 4).unwrap();
        let d = a.degrees();
        let arr = a.as_array();
        for c in 0..4 {
            let v = e.coords.column(c);
            // (I - D^-1 A) v = lambda v
            for i in 0..4 {
                let av: f64 = (0..4).map(|j| arr[[i, j]] * v[j]).sum();
                let lhs = v[i] - av / d[i];
                assert!((lhs - e.eigenvalues[c] * v[i]).abs() < 1e-10);
            }
        }
        assert!(e.eigenvalues.iter().all(|l| *l > -1e-12 && *l < 2.0 + 1e-12));
    }

    #[test]
    fn isolated_node_is_an_error() {
        let a = AffinityMatrix::new(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(a.isolated_nodes(), vec![2]);
        let err = embed(&a, 2).unwrap_err();
        assert!(err.to_string().contains("outlier"));
    }

    #[test]
    fn bad_k() {
        let a = blocks(&[3]);
        assert!(matches!(embed(&a, 0), Err(Error::Parameter(_))));
        assert!(matches!(embed(&a, 4), Err(Error::Parameter(_))));
    }
}
