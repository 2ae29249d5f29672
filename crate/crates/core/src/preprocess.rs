//! Turns variable-size segments into unit-norm feature columns.
//!
//! Per segment: zero every cell below the segment mean, resize to `f x t`
//! with a separable bicubic (Keys, a = -0.5) filter, flatten column-major and
//! scale to unit Euclidean norm.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{SegmentArchive, SpectroSegment};

const UNIT_NORM_TOL: f64 = 1e-9;

/// `d x n` matrix whose column `j` is the unit-norm feature vector of sample
/// `ids[j]`. `shape = (f, t)` records how a column folds back into an image
/// (`d = f * t`, column-major).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    ids: Vec<String>,
    shape: (usize, usize),
}

impl FeatureMatrix {
    /// Wraps columns that are already unit-norm.
    pub fn new(data: Array2<f64>, ids: Vec<String>, shape: (usize, usize)) -> Result<Self> {
        check_layout(&data, &ids, shape)?;
        for (j, col) in data.columns().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Validation(format!(
                    "feature column {:?} has norm {norm}, expected 1",
                    ids[j]
                )));
            }
        }
        Ok(FeatureMatrix { data, ids, shape })
    }

    /// Scales every column to unit norm. Zero or non-finite columns are
    /// rejected by id.
    pub fn from_unnormalized(mut data: Array2<f64>, ids: Vec<String>, shape: (usize, usize)) -> Result<Self> {
        check_layout(&data, &ids, shape)?;
        for (j, mut col) in data.columns_mut().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Validation(format!(
                    "sample {:?} has a zero (or non-finite) feature vector and cannot be normalized",
                    ids[j]
                )));
            }
            col /= norm;
        }
        Ok(FeatureMatrix { data, ids, shape })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.data.column(j)
    }

    /// Columns `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.select(Axis(1), indices),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            shape: self.shape,
        }
    }

    /// `S^T S`, computed pair by pair with one dot routine so identical
    /// columns give bitwise-identical entries.
    pub fn gram(&self) -> Array2<f64> {
        let rows = self.data.t().as_standard_layout().into_owned();
        let n = rows.nrows();
        let lower: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let ri = rows.row(i);
                (0..=i).map(|j| ri.dot(&rows.row(j))).collect()
            })
            .collect();
        let mut g = Array2::zeros((n, n));
        for (i, row) in lower.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                g[[i, j]] = v;
                g[[j, i]] = v;
            }
        }
        g
    }

    /// Cosine-similarity matrix, `g_ij / sqrt(g_ii g_jj)` clamped to [-1, 1].
    /// Duplicate columns get exactly 1.
    pub fn cosine_matrix(&self) -> Array2<f64> {
        cosine_from_gram(&self.gram())
    }
}

pub(crate) fn cosine_from_gram(g: &Array2<f64>) -> Array2<f64> {
    let norms: Vec<f64> = g.diag().iter().map(|v| v.sqrt()).collect();
    Array2::from_shape_fn(g.dim(), |(i, j)| (g[[i, j]] / (norms[i] * norms[j])).clamp(-1.0, 1.0))
}

fn check_layout(data: &Array2<f64>, ids: &[String], (f, t): (usize, usize)) -> Result<()> {
    if f * t != data.nrows() {
        return Err(Error::Validation(format!(
            "feature dimension {} does not match shape {f}x{t}",
            data.nrows()
        )));
    }
    if ids.len() != data.ncols() {
        return Err(Error::Validation(format!(
            "{} ids for {} feature columns",
            ids.len(),
            data.ncols()
        )));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::Validation(format!("duplicate sample id {dup:?}")));
    }
    Ok(())
}

/// Target image size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub f: usize,
    pub t: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { f: 64, t: 64 }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.f < 2 || self.t < 2 {
            return Err(Error::Parameter(format!(
                "target size {}x{} is too small; f and t must be at least 2",
                self.f, self.t
            )));
        }
        Ok(())
    }
}

/// Zeroes every cell strictly below the segment mean (mean taken over all
/// cells, zeros included).
pub fn clip_below_mean(seg: &SpectroSegment) -> SpectroSegment {
    let e = seg.energy();
    let mean = e.mean().unwrap_or(0.0);
    let clipped = e.mapv(|v| if v >= mean { v } else { 0.0 });
    seg.with_energy(clipped).expect("clipping preserves validity")
}

/// Keys cubic convolution kernel with a = -0.5.
pub(crate) fn keys_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Four (index, weight) taps per output sample along one axis, with
/// edge-replicated indices and pixel-centre alignment.
fn axis_taps(n_in: usize, n_out: usize) -> Vec<[(usize, f64); 4]> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|k| {
            let x = (k as f64 + 0.5) * scale - 0.5;
            let base = x.floor() as isize;
            let mut taps = [(0usize, 0.0f64); 4];
            for (m, tap) in taps.iter_mut().enumerate() {
                let i = base - 1 + m as isize;
                let idx = i.clamp(0, n_in as isize - 1) as usize;
                *tap = (idx, keys_kernel(x - i as f64));
            }
            taps
        })
        .collect()
}

/// Bicubic resize to `f x t`. Negative overshoot is clamped to zero.
pub fn resize_bicubic(seg: &SpectroSegment, f: usize, t: usize) -> Result<SpectroSegment> {
    if f < 2 || t < 2 {
        return Err(Error::Parameter(format!(
            "resize target {f}x{t}; both sides must be at least 2"
        )));
    }
    let src = seg.energy();
    let (n_freq, n_time) = src.dim();
    let row_taps = axis_taps(n_freq, f);
    let col_taps = axis_taps(n_time, t);

    // frequency axis first: (f x n_time)
    let mut tmp = Array2::<f64>::zeros((f, n_time));
    for (r, taps) in row_taps.iter().enumerate() {
        for c in 0..n_time {
            tmp[[r, c]] = taps.iter().map(|&(i, w)| w * src[[i, c]]).sum();
        }
    }
    let mut out = Array2::<f64>::zeros((f, t));
    for r in 0..f {
        for (c, taps) in col_taps.iter().enumerate() {
            let v: f64 = taps.iter().map(|&(j, w)| w * tmp[[r, j]]).sum();
            out[[r, c]] = v.max(0.0);
        }
    }
    seg.with_energy(out)
}

/// Feature vector of one segment before normalization.
fn raw_feature(seg: &SpectroSegment, cfg: &PreprocessConfig) -> Result<Array1<f64>> {
    let resized = resize_bicubic(&clip_below_mean(seg), cfg.f, cfg.t)?;
    // column-major flatten
    Ok(resized.energy().t().iter().copied().collect())
}

pub fn vectorize(archive: &SegmentArchive, cfg: &PreprocessConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    if archive.is_empty() {
        return Err(Error::Validation("cannot vectorize an empty archive".into()));
    }
    let columns: Vec<Array1<f64>> = archive
        .segments()
        .par_iter()
        .map(|seg| raw_feature(seg, cfg))
        .collect::<Result<_>>()?;
    let d = cfg.f * cfg.t;
    let mut data = Array2::zeros((d, columns.len()));
    for (j, col) in columns.into_iter().enumerate() {
        data.column_mut(j).assign(&col);
    }
    let ids = archive.ids().map(str::to_owned).collect();
    FeatureMatrix::from_unnormalized(data, ids, (cfg.f, cfg.t))
}
