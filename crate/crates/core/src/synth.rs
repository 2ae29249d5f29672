//! Seeded synthetic data with known labels: unions of random linear
//! subspaces, and spectrogram-like segments drawn from parametric frequency
//! contours.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::{SegmentArchive, SpectroSegment};
use crate::preprocess::FeatureMatrix;

/// Label given to generated outliers.
pub const OUTLIER_LABEL: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpec {
    pub ambient_dim: usize,
    /// One entry per subspace.
    pub dims: Vec<usize>,
    pub points_per: usize,
    pub noise_sigma: f64,
    pub outlier_count: usize,
    pub seed: u64,
}

impl SubspaceSpec {
    /// `n` subspaces of equal dimension `dim`.
    pub fn uniform(ambient_dim: usize, n: usize, dim: usize, points_per: usize, seed: u64) -> Self {
        SubspaceSpec {
            ambient_dim,
            dims: vec![dim; n],
            points_per,
            noise_sigma: 0.0,
            outlier_count: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Parameter("at least one subspace is required".into()));
        }
        for &d in &self.dims {
            if d == 0 || d >= self.ambient_dim {
                return Err(Error::Parameter(format!(
                    "subspace dimension {d} must lie in 1..{}",
                    self.ambient_dim
                )));
            }
            if self.points_per < d + 1 {
                return Err(Error::Parameter(format!(
                    "{} points per subspace is too few for dimension {d}",
                    self.points_per
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceData {
    pub features: FeatureMatrix,
    /// Subspace index per sample, [`OUTLIER_LABEL`] for outliers.
    pub labels: Vec<i64>,
    /// Orthonormal basis (`ambient x dim`) of each subspace.
    pub bases: Vec<Array2<f64>>,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
}

/// Gram-Schmidt (applied twice) on a Gaussian matrix.
fn random_basis(rng: &mut ChaCha8Rng, ambient: usize, dim: usize) -> Array2<f64> {
    let mut basis = Array2::<f64>::zeros((ambient, dim));
    let mut j = 0;
    while j < dim {
        let mut v = gaussian_vec(rng, ambient);
        for _ in 0..2 {
            for i in 0..j {
                let b = basis.column(i);
                let p = b.dot(&v);
                v.scaled_add(-p, &b);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            basis.column_mut(j).assign(&(v / norm));
            j += 1;
        }
    }
    basis
}

pub fn generate_subspaces(spec: &SubspaceSpec) -> Result<SubspaceData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ambient = spec.ambient_dim;
    let n = spec.dims.len() * spec.points_per + spec.outlier_count;
    let mut data = Array2::zeros((ambient, n));
    let mut labels = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(spec.dims.len());
    let mut col = 0;

    for (s, &dim) in spec.dims.iter().enumerate() {
        let basis = random_basis(&mut rng, ambient, dim);
        for _ in 0..spec.points_per {
            let coef = gaussian_vec(&mut rng, dim);
            let mut x = basis.dot(&coef);
            if spec.noise_sigma > 0.0 {
                x.scaled_add(spec.noise_sigma, &gaussian_vec(&mut rng, ambient));
            }
            data.column_mut(col).assign(&x);
            labels.push(s as i64);
            col += 1;
        }
        bases.push(basis);
    }
    for _ in 0..spec.outlier_count {
        data.column_mut(col).assign(&gaussian_vec(&mut rng, ambient));
        col += 1;
    }
    labels.resize(n, OUTLIER_LABEL);
    let ids = (0..n).map(|i| format!("p{i:05}")).collect();
    let features = FeatureMatrix::from_unnormalized(data, ids, (ambient, 1))?;
    Ok(SubspaceData {
        features,
        labels,
        bases,
    })
}

/// Parametric frequency contours. Rows of a segment run from low to high
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourClass {
    Upward,
    Downward,
    Flat,
    UShape,
    Arch,
}

impl ContourClass {
    pub const ALL: [ContourClass; 5] = [
        ContourClass::Upward,
        ContourClass::Downward,
        ContourClass::Flat,
        ContourClass::UShape,
        ContourClass::Arch,
    ];

    /// Normalized frequency position at normalized time `u`, given the band
    /// edges `lo < hi`.
    fn position(self, u: f64, lo: f64, hi: f64) -> f64 {
        let span = hi - lo;
        let bowl = (2.0 * u - 1.0).powi(2);
        match self {
            ContourClass::Upward => lo + span * u,
            ContourClass::Downward => hi - span * u,
            ContourClass::Flat => 0.5 * (lo + hi),
            ContourClass::UShape => lo + span * bowl,
            ContourClass::Arch => hi - span * bowl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub n: usize,
    /// Number of contour classes used, at most 5.
    pub shape_classes: usize,
    /// Fraction of `n` rendered as unstructured blobs (label -1).
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl SegmentSpec {
    pub fn new(n: usize, shape_classes: usize, seed: u64) -> Self {
        SegmentSpec {
            n,
            shape_classes,
            outlier_fraction: 0.0,
            seed,
        }
    }
}

const RIDGE_SIGMA: f64 = 1.2;
const BACKGROUND: f64 = 0.02;

fn render_contour(rng: &mut ChaCha8Rng, class: ContourClass) -> Array2<f64> {
    let n_freq = rng.random_range(48..=72);
    let n_time = rng.random_range(12..=24);
    let lo = 0.1 + rng.random_range(-0.04..0.04);
    let hi = 0.9 + rng.random_range(-0.04..0.04);
    let amplitude = rng.random_range(0.8..1.2);
    let top = (n_freq - 1) as f64;
    let mut e = Array2::from_shape_fn((n_freq, n_time), |_| rng.random_range(0.0..BACKGROUND));
    let flat_row = (ContourClass::Flat.position(0.0, lo, hi) * top).round();
    for c in 0..n_time {
        let u = c as f64 / (n_time - 1) as f64;
        let centre = match class {
            ContourClass::Flat => flat_row,
            _ => class.position(u, lo, hi) * top,
        };
        let gain = amplitude * rng.random_range(0.7..1.0);
        for r in 0..n_freq {
            let z = (r as f64 - centre) / RIDGE_SIGMA;
            e[[r, c]] += gain * (-0.5 * z * z).exp();
        }
    }
    e
}

fn render_blobs(rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n_freq = rng.random_range(48..=72);
    let n_time = rng.random_range(12..=24);
    let mut e = Array2::from_shape_fn((n_freq, n_time), |_| rng.random_range(0.0..BACKGROUND));
    for _ in 0..3 {
        let (cr, cc) = (
            rng.random_range(0.0..n_freq as f64),
            rng.random_range(0.0..n_time as f64),
        );
        let (sr, sc) = (rng.random_range(2.0..6.0), rng.random_range(1.0..4.0));
        let amp = rng.random_range(0.5..1.0);
        for ((r, c), v) in e.indexed_iter_mut() {
            let (zr, zc) = ((r as f64 - cr) / sr, (c as f64 - cc) / sc);
            *v += amp * (-0.5 * (zr * zr + zc * zc)).exp();
        }
    }
    e
}

/// Renders `spec.n` segments in shuffled order; inliers cycle through the
/// first `shape_classes` contour classes.
pub fn generate_segments(spec: &SegmentSpec) -> Result<(SegmentArchive, Vec<i64>)> {
    if spec.shape_classes == 0 || spec.shape_classes > ContourClass::ALL.len() {
        return Err(Error::Parameter(format!(
            "shape_classes must lie in 1..=5, got {}",
            spec.shape_classes
        )));
    }
    if !(0.0..=1.0).contains(&spec.outlier_fraction) {
        return Err(Error::Parameter(format!(
            "outlier_fraction must lie in [0, 1], got {}",
            spec.outlier_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_out = (spec.n as f64 * spec.outlier_fraction).round() as usize;
    let mut labels: Vec<i64> = (0..spec.n - n_out)
        .map(|i| (i % spec.shape_classes) as i64)
        .chain(std::iter::repeat_n(OUTLIER_LABEL, n_out))
        .collect();
    labels.shuffle(&mut rng);

    let mut segments = Vec::with_capacity(spec.n);
    for (i, &l) in labels.iter().enumerate() {
        let energy = if l == OUTLIER_LABEL {
            render_blobs(&mut rng)
        } else {
            render_contour(&mut rng, ContourClass::ALL[l as usize])
        };
        segments.push(SpectroSegment::new(format!("usv{i:05}"), energy)?);
    }
    Ok((
        SegmentArchive::new(segments, format!("synthetic seed={}", spec.seed))?,
        labels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argmax_rows(e: &Array2<f64>) -> Vec<usize> {
        e.columns()
            .into_iter()
            .map(|c| c.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0)
            .collect()
    }

    #[test]
    fn single_line_noise_free() {
        let d = generate_subspaces(&SubspaceSpec::uniform(6, 1, 1, 5, 3)).unwrap();
        let first = d.features.column(0).to_owned();
        for j in 1..5 {
            let c = d.features.column(j);
            assert!((c.dot(&first).abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_points_lie_in_subspace() {
        let spec = SubspaceSpec::uniform(10, 3, 2, 8, 5);
        let d = generate_subspaces(&spec).unwrap();
        for j in 0..d.features.n() {
            let b = &d.bases[d.labels[j] as usize];
            let x = d.features.column(j);
            let proj = b.dot(&b.t().dot(&x));
            let r = &x - &proj;
            assert!(r.dot(&r).sqrt() < 1e-10);
        }
        for b in &d.bases {
            let g = b.t().dot(b);
            for ((i, j), v) in g.indexed_iter() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outlier_projection_energy() {
        let spec = SubspaceSpec {
            outlier_count: 2000,
            ..SubspaceSpec::uniform(20, 1, 4, 5, 9)
        };
        let d = generate_subspaces(&spec).unwrap();
        let b = &d.bases[0];
        let (mut total, mut count) = (0.0, 0);
        for j in 0..d.features.n() {
            if d.labels[j] == OUTLIER_LABEL {
                let p = b.t().dot(&d.features.column(j));
                total += p.dot(&p);
                count += 1;
            }
        }
        let mean = total / count as f64;
        assert!((mean - 4.0 / 20.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn deterministic_and_validated() {
        let spec = SubspaceSpec {
            noise_sigma: 0.1,
            outlier_count: 3,
            ..SubspaceSpec::uniform(8, 2, 2, 4, 1)
        };
        let a = generate_subspaces(&spec).unwrap();
        let b = generate_subspaces(&spec).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        assert!(generate_subspaces(&SubspaceSpec::uniform(3, 1, 3, 5, 0)).is_err());
        assert!(generate_subspaces(&SubspaceSpec::uniform(5, 1, 3, 3, 0)).is_err());
    }

    #[test]
    fn flat_and_sweep_contours() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let flat = argmax_rows(&render_contour(&mut rng, ContourClass::Flat));
            assert!(flat.iter().all(|r| *r == flat[0]));
            let up = argmax_rows(&render_contour(&mut rng, ContourClass::Upward));
            assert!(up.windows(2).all(|w| w[1] > w[0]), "{up:?}");
            let down = argmax_rows(&render_contour(&mut rng, ContourClass::Downward));
            assert!(down.windows(2).all(|w| w[1] < w[0]), "{down:?}");
        }
    }

    #[test]
    fn segments_from_generator() {
        let (a, l) = generate_segments(&SegmentSpec::new(1, 3, 0)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(l, vec![0]);
        let spec = SegmentSpec {
            outlier_fraction: 0.1,
            ..SegmentSpec::new(50, 5, 4)
        };
        let (a, l) = generate_segments(&spec).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(l.iter().filter(|v| **v == OUTLIER_LABEL).count(), 5);
        let (b, l2) = generate_segments(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(l, l2);
        assert!(generate_segments(&SegmentSpec::new(5, 6, 0)).is_err());
        assert!(generate_segments(&SegmentSpec::new(5, 0, 0)).is_err());
    }
}
