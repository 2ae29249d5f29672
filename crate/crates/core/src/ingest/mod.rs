//! Segment archives and the small text/binary tables the pipeline reads and
//! writes.
//!
//! Two archive encodings exist. The binary one is a single little-endian
//! file:
//!
//! ```text
//! "SSCA" | u32 version = 1 | u32 count
//! per segment: u16 id_len | id (UTF-8) | u32 n_freq | u32 n_time | n_freq*n_time f64, row-major
//! ```
//!
//! The CSV one is a directory holding `manifest.csv` (`id,file`, ids in
//! archive order) plus one matrix file per segment, rows = frequency bins.

mod archive;
mod features;
mod tables;

use std::collections::HashSet;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use archive::{read_archive, read_archive_binary, read_archive_csv, write_archive, write_archive_csv};
pub use features::{is_features_file, read_features, write_features};
pub use tables::{
    read_labels, read_matrix_csv, read_truth, write_centroids, write_embedding, write_labels, write_matrix_csv,
    write_triplets, write_truth, LabelRecord, SampleStatus,
};

/// Formats a float with 17 significant digits, enough for an exact
/// round-trip through `str::parse::<f64>`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One vocalization: a nonnegative energy map, rows are frequency bins and
/// columns are time frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroSegment {
    id: String,
    energy: Array2<f64>,
}

impl SpectroSegment {
    pub fn new(id: impl Into<String>, energy: Array2<f64>) -> Result<Self> {
        let id = id.into();
        let (n_freq, n_time) = energy.dim();
        if n_freq < 2 || n_time < 2 {
            return Err(Error::Validation(format!(
                "segment {id:?} is {n_freq}x{n_time}; at least 2x2 is required"
            )));
        }
        if let Some(bad) = energy.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!(
                "segment {id:?} contains energy value {bad}; energies must be finite and nonnegative"
            )));
        }
        Ok(SpectroSegment { id, energy })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn energy(&self) -> &Array2<f64> {
        &self.energy
    }

    pub fn n_freq(&self) -> usize {
        self.energy.nrows()
    }

    pub fn n_time(&self) -> usize {
        self.energy.ncols()
    }

    /// Same id, new energy map; the result is validated like any other segment.
    pub fn with_energy(&self, energy: Array2<f64>) -> Result<Self> {
        SpectroSegment::new(self.id.clone(), energy)
    }
}

/// Ordered collection of segments with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentArchive {
    segments: Vec<SpectroSegment>,
    /// Free-form provenance note. Not stored by either encoding; readers set
    /// it to the path they read from.
    pub source: String,
}

impl SegmentArchive {
    pub fn new(segments: Vec<SpectroSegment>, source: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(segments.len());
        for seg in &segments {
            if !seen.insert(seg.id()) {
                return Err(Error::Validation(format!("duplicate segment id {:?}", seg.id())));
            }
        }
        Ok(SegmentArchive {
            segments,
            source: source.into(),
        })
    }

    pub fn segments(&self) -> &[SpectroSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.id())
    }

    pub fn into_segments(self) -> Vec<SpectroSegment> {
        self.segments
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn segment_rejects_small_and_negative() {
        assert!(SpectroSegment::new("a", Array2::zeros((1, 4))).is_err());
        assert!(SpectroSegment::new("a", Array2::zeros((4, 1))).is_err());
        let err = SpectroSegment::new("neg", array![[1.0, -0.1], [0.0, 0.0]]).unwrap_err();
        assert!(err.to_string().contains("neg"));
        assert!(SpectroSegment::new("nan", array![[1.0, f64::NAN], [0.0, 0.0]]).is_err());
        assert!(SpectroSegment::new("inf", array![[1.0, f64::INFINITY], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn archive_rejects_duplicate_ids() {
        let s = SpectroSegment::new("a", Array2::ones((2, 2))).unwrap();
        let err = SegmentArchive::new(vec![s.clone(), s], "").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn fmt_f64_round_trips() {
        for x in [0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
