//! Cluster-diversity measures on centroids: the harmonic mean and the
//! population standard deviation of pairwise cosine distances
//! `1 - cos(c_i, c_j)`, each reported for inlier-only centroids and for
//! centroids recomputed over all members (outliers included).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use ndarray::Array2;

use crate::assign::{centroids_of, ClusterModel};
use crate::error::{Error, Result};
use crate::ingest::fmt_f64;
use crate::outlier::cosine_similarity;
use crate::preprocess::FeatureMatrix;

/// Unordered pairwise cosine distances, `(i, j)` with `i < j` in row-major order.
pub fn pairwise_cosine_distances(centroids: &Array2<f64>) -> Result<Vec<f64>> {
    let k = centroids.nrows();
    if k < 2 {
        return Err(Error::Parameter(format!(
            "inter-centroid distances need K >= 2 clusters, got K = {k}"
        )));
    }
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let cos = cosine_similarity(centroids.row(i), centroids.row(j))
                .map_err(|_| Error::Domain(format!("centroid {i} or {j} is the zero vector")))?;
            out.push(1.0 - cos);
        }
    }
    Ok(out)
}

/// `( 1/(K(K-1)) * sum_{i != j} 1/(1 - cos(c_i, c_j)) )^-1`.
///
/// A pair at distance 0 makes its term diverge; the limit value 0 is
/// returned with a warning.
pub fn hmean_cosine_distance(centroids: &Array2<f64>) -> Result<f64> {
    let d = sorted_distances(centroids)?;
    Ok(hmean(&d))
}

/// Distances in ascending order. Summing in a fixed order makes the
/// statistics bit-identical under any renumbering of the clusters.
fn sorted_distances(centroids: &Array2<f64>) -> Result<Vec<f64>> {
    let mut d = pairwise_cosine_distances(centroids)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn hmean(d: &[f64]) -> f64 {
    if d.iter().any(|v| *v <= 0.0) {
        warn!("parallel centroid pair: harmonic mean of cosine distances collapses to 0");
        return 0.0;
    }
    // each unordered pair appears twice among the K(K-1) ordered terms
    let mean_inv = d.iter().map(|v| 1.0 / v).sum::<f64>() / d.len() as f64;
    1.0 / mean_inv
}

/// Population standard deviation over the `K(K-1)/2` unordered distances.
pub fn std_cosine_distance(centroids: &Array2<f64>) -> Result<f64> {
    let d = sorted_distances(centroids)?;
    Ok(population_std(&d))
}

fn population_std(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: String,
    pub k: usize,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub n_isolated: usize,
    pub d_cos_hmean: f64,
    pub d_cos_std: f64,
    pub d_cos_hmean_full: f64,
    pub d_cos_std_full: f64,
    /// Inlier members per cluster, largest first. Sorting keeps the report
    /// independent of how clusters are numbered.
    pub cluster_sizes: Vec<usize>,
    /// All members per cluster, largest first.
    pub cluster_sizes_full: Vec<usize>,
}

pub fn report(features: &FeatureMatrix, model: &ClusterModel) -> Result<MetricsReport> {
    if model.n() != features.n() {
        return Err(Error::Validation(format!(
            "model has {} labels, features have {} samples",
            model.n(),
            features.n()
        )));
    }
    if model.k < 2 {
        return Err(Error::Parameter(format!(
            "metrics need K >= 2 clusters, got K = {}",
            model.k
        )));
    }
    let data = features.data().view();
    let inliers = &model.partition.inlier_idx;
    let inlier_centroids = centroids_of(data, inliers, &model.inlier_labels(), model.k)?;
    let all: Vec<usize> = (0..model.n()).collect();
    let full_centroids = centroids_of(data, &all, &model.labels, model.k)?;

    let d_in = sorted_distances(&inlier_centroids)?;
    let d_full = sorted_distances(&full_centroids)?;
    Ok(MetricsReport {
        method: model.method.to_string(),
        k: model.k,
        n_inliers: inliers.len(),
        n_outliers: model.partition.outlier_idx.len(),
        n_isolated: model.isolated.len(),
        d_cos_hmean: hmean(&d_in),
        d_cos_std: population_std(&d_in),
        d_cos_hmean_full: hmean(&d_full),
        d_cos_std_full: population_std(&d_full),
        cluster_sizes: descending(model.inlier_cluster_sizes()),
        cluster_sizes_full: descending(model.full_cluster_sizes()),
    })
}

fn descending(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

const CSV_FIELDS: [&str; 9] = [
    "method",
    "k",
    "n_inliers",
    "n_outliers",
    "n_isolated",
    "d_cos_hmean",
    "d_cos_std",
    "d_cos_hmean_full",
    "d_cos_std_full",
];

fn join_sizes(s: &[usize]) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

impl MetricsReport {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            writeln!(s, "{k}={v}").unwrap();
        }
        writeln!(s, "cluster_sizes={}", join_sizes(&self.cluster_sizes)).unwrap();
        writeln!(s, "cluster_sizes_full={}", join_sizes(&self.cluster_sizes_full)).unwrap();
        s
    }

    fn fields(&self) -> [(&'static str, String); 9] {
        [
            (CSV_FIELDS[0], self.method.clone()),
            (CSV_FIELDS[1], self.k.to_string()),
            (CSV_FIELDS[2], self.n_inliers.to_string()),
            (CSV_FIELDS[3], self.n_outliers.to_string()),
            (CSV_FIELDS[4], self.n_isolated.to_string()),
            (CSV_FIELDS[5], fmt_f64(self.d_cos_hmean)),
            (CSV_FIELDS[6], fmt_f64(self.d_cos_std)),
            (CSV_FIELDS[7], fmt_f64(self.d_cos_hmean_full)),
            (CSV_FIELDS[8], fmt_f64(self.d_cos_std_full)),
        ]
    }

    pub fn csv_header() -> String {
        CSV_FIELDS.join(",")
    }

    /// One CSV row matching [`MetricsReport::csv_header`], for sweep tables.
    pub fn csv_row(&self) -> String {
        self.fields().map(|(_, v)| v).join(",")
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("metrics line {}: expected key=value", i + 1)))?;
            map.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| Error::Validation(format!("metrics report lacks {k:?}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Validation(format!("metrics field {k:?} is not a number")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Validation(format!("metrics field {k:?} is not an integer")))
        };
        let sizes = |k: &str| -> Result<Vec<usize>> {
            let v = get(k)?;
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(';')
                .map(|s| s.parse().map_err(|_| Error::Validation(format!("bad entry in {k:?}"))))
                .collect()
        };
        Ok(MetricsReport {
            method: get("method")?,
            k: int("k")?,
            n_inliers: int("n_inliers")?,
            n_outliers: int("n_outliers")?,
            n_isolated: int("n_isolated")?,
            d_cos_hmean: num("d_cos_hmean")?,
            d_cos_std: num("d_cos_std")?,
            d_cos_hmean_full: num("d_cos_hmean_full")?,
            d_cos_std_full: num("d_cos_std_full")?,
            cluster_sizes: sizes("cluster_sizes")?,
            cluster_sizes_full: sizes("cluster_sizes_full")?,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_kv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv(&text)
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns `assignment[row] = column`.
pub fn hungarian(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    // 1-based arrays as in the classic formulation; p[j] = row matched to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of samples whose predicted label disagrees with the truth after
/// the best one-to-one relabelling of predicted clusters.
pub fn clustering_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Validation(format!(
            "{} predicted labels vs {} true labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let kp = predicted.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let m = kp.max(kt);
    let mut overlap = Array2::<f64>::zeros((m, m));
    for (&p, &t) in predicted.iter().zip(truth) {
        overlap[[p, t]] += 1.0;
    }
    let cost = overlap.mapv(|v| -v);
    let assignment = hungarian(&cost);
    let matched: f64 = assignment.iter().enumerate().map(|(p, &t)| overlap[[p, t]]).sum();
    Ok(1.0 - matched / predicted.len() as f64)
}
