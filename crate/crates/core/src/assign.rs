//! Centroids of inlier clusters and nearest-centroid (by cosine) assignment
//! of outliers.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::ingest::{LabelRecord, SampleStatus};
use crate::outlier::{cosine_similarity, Partition};
use crate::pipeline::Method;
use crate::preprocess::FeatureMatrix;

/// Result of one clustering run over all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub ids: Vec<String>,
    /// One label per sample, outliers included.
    pub labels: Vec<usize>,
    /// `k x d` means of the inlier members of each cluster.
    pub centroids: Array2<f64>,
    pub partition: Partition,
    /// Samples that passed the threshold test but had no edges in the
    /// affinity graph; they are handled as outliers and also listed in
    /// `partition.outlier_idx`.
    pub isolated: Vec<usize>,
    pub k: usize,
    pub method: Method,
    /// Image shape of a feature vector, `(f, t)`.
    pub shape: (usize, usize),
}

impl ClusterModel {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.partition.outlier_idx.binary_search(&i).is_ok()
    }

    pub fn status(&self, i: usize) -> SampleStatus {
        if self.isolated.binary_search(&i).is_ok() {
            SampleStatus::Isolated
        } else if self.is_outlier(i) {
            SampleStatus::Outlier
        } else {
            SampleStatus::Inlier
        }
    }

    pub fn inlier_labels(&self) -> Vec<usize> {
        self.partition.inlier_idx.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn inlier_cluster_sizes(&self) -> Vec<usize> {
        sizes(self.partition.inlier_idx.iter().map(|&i| self.labels[i]), self.k)
    }

    pub fn full_cluster_sizes(&self) -> Vec<usize> {
        sizes(self.labels.iter().copied(), self.k)
    }
}

fn sizes(labels: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    for l in labels {
        s[l] += 1;
    }
    s
}

/// Row `c` is the plain mean of the columns `members[i]` with `labels[i] == c`.
pub fn centroids(features: &FeatureMatrix, members: &[usize], labels: &[usize], k: usize) -> Result<Array2<f64>> {
    centroids_of(features.data().view(), members, labels, k)
}

pub(crate) fn centroids_of(
    data: ArrayView2<f64>,
    members: &[usize],
    labels: &[usize],
    k: usize,
) -> Result<Array2<f64>> {
    if members.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} members but {} labels",
            members.len(),
            labels.len()
        )));
    }
    let mut sums = Array2::<f64>::zeros((k, data.nrows()));
    let mut counts = vec![0usize; k];
    for (&m, &l) in members.iter().zip(labels) {
        if l >= k {
            return Err(Error::Validation(format!("label {l} out of range for k = {k}")));
        }
        sums.row_mut(l).scaled_add(1.0, &data.column(m));
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Validation(format!("cluster {empty} has no members")));
    }
    for (mut row, &c) in sums.rows_mut().into_iter().zip(&counts) {
        row /= c as f64;
    }
    Ok(sums)
}

/// Index of the most cosine-similar centroid; lowest index on ties.
pub fn nearest_centroid(sample: ArrayView1<f64>, centroids: &Array2<f64>) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let cos = cosine_similarity(sample, row)
            .map_err(|_| Error::Domain(format!("centroid {c} is the zero vector; cosine is undefined")))?;
        if cos > best.1 {
            best = (c, cos);
        }
    }
    Ok(best.0)
}

/// Builds the full model: centroids from the inliers' labels, then every
/// outlier goes to its most similar centroid. Inlier labels are untouched.
pub fn assign_outliers(
    features: &FeatureMatrix,
    partition: Partition,
    inlier_labels: &[usize],
    k: usize,
    method: Method,
) -> Result<ClusterModel> {
    if partition.n() != features.n() {
        return Err(Error::Validation(format!(
            "partition covers {} samples, features have {}",
            partition.n(),
            features.n()
        )));
    }
    let centroids = centroids(features, &partition.inlier_idx, inlier_labels, k)?;
    let mut labels = vec![0usize; features.n()];
    for (&i, &l) in partition.inlier_idx.iter().zip(inlier_labels) {
        labels[i] = l;
    }
    for &o in &partition.outlier_idx {
        labels[o] = nearest_centroid(features.column(o), &centroids)?;
    }
    Ok(ClusterModel {
        ids: features.ids().to_vec(),
        labels,
        centroids,
        partition,
        isolated: Vec::new(),
        k,
        method,
        shape: features.shape(),
    })
}

/// Rebuilds a model from stored per-sample labels. Records must list the
/// feature ids in the same order; `k` is one past the largest label. The
/// similarity threshold is not stored, so `partition.tau` is NaN.
pub fn model_from_records(features: &FeatureMatrix, records: &[LabelRecord], method: Method) -> Result<ClusterModel> {
    if records.len() != features.n() {
        return Err(Error::Validation(format!(
            "labels file has {} rows, features have {} samples",
            records.len(),
            features.n()
        )));
    }
    for (i, (r, id)) in records.iter().zip(features.ids()).enumerate() {
        if &r.id != id {
            return Err(Error::Validation(format!(
                "row {} of the labels file is {:?}, features have {:?}",
                i + 1,
                r.id,
                id
            )));
        }
    }
    let k = records.iter().map(|r| r.label + 1).max().unwrap_or(0);
    let mut partition = Partition {
        inlier_idx: Vec::new(),
        outlier_idx: Vec::new(),
        tau: f64::NAN,
    };
    let mut isolated = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match r.status {
            SampleStatus::Inlier => partition.inlier_idx.push(i),
            SampleStatus::Outlier => partition.outlier_idx.push(i),
            SampleStatus::Isolated => {
                partition.outlier_idx.push(i);
                isolated.push(i);
            }
        }
    }
    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
    let inlier_labels: Vec<usize> = partition.inlier_idx.iter().map(|&i| labels[i]).collect();
    let centroids = centroids(features, &partition.inlier_idx, &inlier_labels, k)?;
    Ok(ClusterModel {
        ids: features.ids().to_vec(),
        labels,
        centroids,
        partition,
        isolated,
        k,
        method,
        shape: features.shape(),
    })
}
