use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::fmt_f64;
use crate::assign::ClusterModel;
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a dense matrix as CSV, one row per line, no header.
pub fn write_matrix_csv(m: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_view(m.view(), path.as_ref())
}

fn write_matrix_view(m: ArrayView2<f64>, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("line {}", i + 1), e.to_string()))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::format(
                    path,
                    format!("line {}", i + 1),
                    format!("expected {c} columns, found {}", row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
        nrows += 1;
    }
    Array2::from_shape_vec((nrows, ncols.unwrap_or(0)), values).map_err(|e| Error::format(path, "end", e.to_string()))
}

/// How a sample entered its cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    /// Clustered directly.
    Inlier,
    /// Below the similarity threshold; assigned to the nearest centroid.
    Outlier,
    /// Above the threshold but without affinity edges; assigned like an
    /// outlier.
    Isolated,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Inlier => "inlier",
            SampleStatus::Outlier => "outlier",
            SampleStatus::Isolated => "isolated",
        }
    }

    pub fn is_outlier(self) -> bool {
        self != SampleStatus::Inlier
    }
}

/// One row of a labels file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub id: String,
    pub label: usize,
    pub status: SampleStatus,
}

const LABELS_HEADER: &str = "id,label,status";

/// Labels CSV: header `id,label,status`, one row per sample in order.
pub fn write_labels(model: &ClusterModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "{LABELS_HEADER}").map_err(|e| Error::io(path, e))?;
    for (i, id) in model.ids.iter().enumerate() {
        writeln!(w, "{id},{},{}", model.labels[i], model.status(i).as_str()).map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, LABELS_HEADER)) => {}
        _ => {
            return Err(Error::format(
                path,
                "line 1",
                format!("expected header \"{LABELS_HEADER}\""),
            ))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let at = || format!("line {}", i + 1);
        let mut parts = line.rsplitn(3, ',');
        let (Some(status), Some(label), Some(id)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(path, at(), "expected 3 fields"));
        };
        let label = label
            .parse::<usize>()
            .map_err(|e| Error::format(path, at(), format!("label: {e}")))?;
        let status = match status {
            "inlier" => SampleStatus::Inlier,
            "outlier" => SampleStatus::Outlier,
            "isolated" => SampleStatus::Isolated,
            other => {
                return Err(Error::format(
                    path,
                    at(),
                    format!("status must be inlier, outlier or isolated, got {other:?}"),
                ))
            }
        };
        out.push(LabelRecord {
            id: id.to_owned(),
            label,
            status,
        });
    }
    Ok(out)
}

/// Ground-truth labels from the synthetic generators: `id,label`, outliers
/// carry label -1.
pub fn write_truth(ids: &[String], labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "id,label").map_err(|e| Error::io(path, e))?;
    for (id, l) in ids.iter().zip(labels) {
        writeln!(w, "{id},{l}").map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<(String, i64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let (id, l) = line
            .rsplit_once(',')
            .ok_or_else(|| Error::format(path, format!("line {}", i + 1), "expected \"id,label\""))?;
        let l = l
            .parse()
            .map_err(|e| Error::format(path, format!("line {}", i + 1), format!("{e}")))?;
        out.push((id.to_owned(), l));
    }
    Ok(out)
}

/// Writes each centroid as an `f x t` CSV matrix into `dir`. Files are
/// numbered by descending inlier cluster size (ties: lower cluster index
/// first), so `centroid_00.csv` is the most populous cluster.
pub fn write_centroids(model: &ClusterModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (f, t) = model.shape;
    let sizes = model.inlier_cluster_sizes();
    let mut order: Vec<usize> = (0..model.k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let width = model.k.saturating_sub(1).to_string().len().max(2);
    for (rank, &c) in order.iter().enumerate() {
        let centroid = model.centroids.row(c);
        if centroid.len() != f * t {
            return Err(Error::Validation(format!(
                "centroid {c} has length {}, expected {f}x{t}",
                centroid.len()
            )));
        }
        // feature vectors are column-major flattenings of f x t maps
        let image = Array2::from_shape_fn((f, t), |(i, j)| centroid[j * f + i]);
        write_matrix_csv(&image, dir.join(format!("centroid_{rank:0width$}.csv")))?;
    }
    Ok(())
}

/// Embedding export: header `id,dim0,...,dim{K-1}`, one row per sample.
pub fn write_embedding(ids: &[String], coords: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != coords.nrows() {
        return Err(Error::Validation(format!(
            "{} ids for {} embedding rows",
            ids.len(),
            coords.nrows()
        )));
    }
    let mut w = create(path)?;
    let header: Vec<String> = (0..coords.ncols()).map(|k| format!("dim{k}")).collect();
    writeln!(w, "id,{}", header.join(",")).map_err(|e| Error::io(path, e))?;
    for (id, row) in ids.iter().zip(coords.rows()) {
        let vals: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{id},{}", vals.join(",")).map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

/// Sparse dump of a coefficient matrix: `row,col,value` for nonzero entries,
/// column by column.
pub fn write_triplets(y: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "row,col,value").map_err(|e| Error::io(path, e))?;
    for (j, col) in y.columns().into_iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            if *v != 0.0 {
                writeln!(w, "{i},{j},{}", fmt_f64(*v)).map_err(|e| Error::io(path, e))?;
            }
        }
    }
    finish(w, path)
}
