//! Lloyd's k-means with k-means++ seeding, plus the PCA projection used for
//! exporting the k-means baseline's feature space.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub n_init: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: 300,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// `k x d`
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after the seeding assignment and after every Lloyd step of the
    /// winning restart.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centre per point (lowest index on ties) and its squared distance.
fn assign(points: ArrayView2<f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    points
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.axis_iter(Axis(0)).enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn plus_plus(points: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = points
        .axis_iter(Axis(0))
        .map(|p| sq_dist(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // every point coincides with a chosen centre
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        let c = points.row(next);
        for (d, p) in dist.iter_mut().zip(points.axis_iter(Axis(0))) {
            *d = d.min(sq_dist(p, c));
        }
    }
    points.select(Axis(0), &chosen)
}

fn means(points: ArrayView2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (p, &l) in points.axis_iter(Axis(0)).zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &p);
        counts[l] += 1;
    }
    for (mut row, &c) in sums.axis_iter_mut(Axis(0)).zip(&counts) {
        if c > 0 {
            row /= c as f64;
        }
    }
    sums
}

/// Refills empty clusters: the point farthest from its centre inside the
/// currently largest cluster moves to the empty one.
fn repair_empty(labels: &mut [usize], dist: &[f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k)
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .unwrap();
        if counts[largest] < 2 {
            return;
        }
        let far = (0..labels.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
            .unwrap();
        labels[far] = empty;
    }
}

fn lloyd(points: ArrayView2<f64>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let mut centers = plus_plus(points, k, rng);
    let (mut labels, mut dist) = assign(points, &centers);
    let mut trace = vec![dist.iter().sum::<f64>()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        repair_empty(&mut labels, &dist, k);
        let new_centers = means(points, &labels, k);
        let (new_labels, new_dist) = assign(points, &new_centers);
        trace.push(new_dist.iter().sum());
        let stable = new_labels == labels || new_centers == centers;
        centers = new_centers;
        labels = new_labels;
        dist = new_dist;
        if stable {
            converged = true;
            break;
        }
    }

    // the last assignment may have emptied a cluster again (duplicate points)
    let before = labels.clone();
    repair_empty(&mut labels, &dist, k);
    if labels != before {
        centers = means(points, &labels, k);
        let inertia = points
            .axis_iter(Axis(0))
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, centers.row(l)))
            .sum();
        trace.push(inertia);
    }
    KMeansResult {
        inertia: *trace.last().unwrap(),
        labels,
        centers,
        iterations,
        converged,
        inertia_trace: trace,
    }
}

/// k-means on the rows of `points` (`n x d`). Restart `r` draws from ChaCha8
/// stream `r` of `seed`, so the result depends only on the inputs. Among
/// restarts the lowest inertia wins, earliest restart on ties.
pub fn kmeans(points: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.nrows();
    let KMeansConfig {
        k,
        seed,
        max_iter,
        n_init,
    } = *cfg;
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "k-means needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if max_iter == 0 || n_init == 0 {
        return Err(Error::Parameter("k-means needs max_iter >= 1 and n_init >= 1".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("k-means input contains non-finite values".into()));
    }
    let runs: Vec<KMeansResult> = (0..n_init)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(points, k, max_iter, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("n_init >= 1");
    Ok(best)
}

/// Projects centred rows onto the top `target_dim` right singular vectors.
/// Each direction's sign is fixed so its largest-magnitude loading is
/// positive.
pub fn pca_reduce(points: ArrayView2<f64>, target_dim: usize) -> Result<Array2<f64>> {
    let (n, d) = points.dim();
    if target_dim == 0 || target_dim > n.min(d) {
        return Err(Error::Parameter(format!(
            "PCA target dimension {target_dim} must lie in 1..={}",
            n.min(d)
        )));
    }
    let mean: Array1<f64> = points.mean_axis(Axis(0)).expect("n >= 1");
    let centred = DMatrix::from_fn(n, d, |i, j| points[[i, j]] - mean[j]);
    let svd = centred
        .clone()
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut out = Array2::zeros((n, target_dim));
    for (k, &comp) in order.iter().take(target_dim).enumerate() {
        let dir = v_t.row(comp);
        let lead = dir
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            let proj: f64 = (0..d).map(|j| centred[(i, j)] * dir[j]).sum();
            out[[i, k]] = sign * proj;
        }
    }
    Ok(out)
}
