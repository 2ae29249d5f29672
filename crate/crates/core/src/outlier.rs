//! Inlier/outlier partition by best cosine match.
//!
//! A sample is an outlier when its highest cosine similarity to any *other*
//! sample is below `tau`.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::preprocess::FeatureMatrix;

/// Threshold preset for DBA recordings; also the default.
pub const TAU_DBA: f64 = 0.8;
/// Threshold preset for C57 recordings.
pub const TAU_C57: f64 = 0.7;

/// Resolves a named preset (`dba`, `c57`) or a literal number.
pub fn parse_tau(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "dba" => Ok(TAU_DBA),
        "c57" => Ok(TAU_C57),
        other => other
            .parse::<f64>()
            .map_err(|_| Error::Parameter(format!("tau must be a number or a preset (dba, c57), got {s:?}"))),
    }
}

pub fn cosine_similarity(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine similarity with a zero vector".into()));
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub inlier_idx: Vec<usize>,
    pub outlier_idx: Vec<usize>,
    pub tau: f64,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.inlier_idx.len() + self.outlier_idx.len()
    }

    /// Everything is an inlier.
    pub fn all_inliers(n: usize, tau: f64) -> Self {
        Partition {
            inlier_idx: (0..n).collect(),
            outlier_idx: Vec::new(),
            tau,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > -1.0 && tau <= 1.0) {
        return Err(Error::Parameter(format!("tau must lie in (-1, 1], got {tau}")));
    }
    Ok(())
}

/// Best match of each sample against all others, read off a cosine matrix.
pub fn max_other_similarity(cosine: &Array2<f64>) -> Vec<f64> {
    let n = cosine.nrows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            cosine
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.clamp(-1.0, 1.0))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Splits using a precomputed cosine matrix (the Gram matrix of unit
/// columns), which callers may reuse for the cosine-affinity baseline.
pub fn split_with_cosine(cosine: &Array2<f64>, tau: f64) -> Result<Partition> {
    check_tau(tau)?;
    let n = cosine.nrows();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "outlier split needs at least 2 samples, got {n}"
        )));
    }
    let best = max_other_similarity(cosine);
    let (outlier_idx, inlier_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| best[i] < tau);
    Ok(Partition {
        inlier_idx,
        outlier_idx,
        tau,
    })
}

pub fn split(features: &FeatureMatrix, tau: f64) -> Result<Partition> {
    check_tau(tau)?;
    split_with_cosine(&features.cosine_matrix(), tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn fm(cols: &[&[f64]]) -> FeatureMatrix {
        let d = cols[0].len();
        let data = Array2::from_shape_fn((d, cols.len()), |(i, j)| cols[j][i]);
        let ids = (0..cols.len()).map(|i| format!("s{i}")).collect();
        FeatureMatrix::from_unnormalized(data, ids, (d, 1)).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let c = |a: &[f64], b: &[f64]| cosine_similarity(ArrayView1::from(a), ArrayView1::from(b)).unwrap();
        assert_eq!(c(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(c(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((c(&[1.0, 1.0], &[1.0, 0.0]) - 0.7071067811865475).abs() < 1e-15);
        let z = array![0.0, 0.0];
        assert!(matches!(
            cosine_similarity(z.view(), array![1.0, 0.0].view()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn split_examples() {
        let f = fm(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let p = split(&f, 0.5).unwrap();
        assert_eq!(p.inlier_idx, vec![0, 1]);
        assert_eq!(p.outlier_idx, vec![2]);

        let p = split(&f, -1.0 + 1e-12).unwrap();
        assert_eq!(p.inlier_idx, vec![0, 1, 2]);
        assert!(p.outlier_idx.is_empty());
    }

    #[test]
    fn split_errors() {
        let f = fm(&[&[1.0, 0.0]]);
        assert!(matches!(split(&f, 0.5), Err(Error::Parameter(_))));
        let f = fm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(split(&f, -1.0).is_err());
        assert!(split(&f, 1.5).is_err());
        assert!(split(&f, f64::NAN).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(parse_tau("dba").unwrap(), 0.8);
        assert_eq!(parse_tau("C57").unwrap(), 0.7);
        assert_eq!(parse_tau("0.9").unwrap(), 0.9);
        assert!(parse_tau("nope").is_err());
    }

    #[test]
    fn duplicates_never_outliers_even_at_one() {
        let f = fm(&[&[0.3, 0.4], &[0.3, 0.4], &[1.0, 0.0]]);
        let p = split(&f, 1.0).unwrap();
        assert_eq!(p.inlier_idx, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn monotone_in_tau(seed in any::<u64>(), t1 in -0.9f64..1.0, t2 in -0.9f64..1.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..12).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let f = fm(&refs);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = split(&f, lo).unwrap();
            let b = split(&f, hi).unwrap();
            prop_assert!(a.outlier_idx.iter().all(|o| b.outlier_idx.contains(o)));
        }

        #[test]
        fn invariant_to_column_scaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let mut scaled = cols.clone();
            for v in scaled[3].iter_mut() { *v *= scale; }
            let r1: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let r2: Vec<&[f64]> = scaled.iter().map(|c| c.as_slice()).collect();
            // tau away from any realized cosine so rounding cannot flip a decision
            let p1 = split(&fm(&r1), 0.6).unwrap();
            let best = max_other_similarity(&fm(&r1).cosine_matrix());
            prop_assume!(best.iter().all(|b| (b - 0.6).abs() > 1e-9));
            prop_assert_eq!(p1, split(&fm(&r2), 0.6).unwrap());
        }
    }
}
