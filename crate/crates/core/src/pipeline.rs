//! Method registry, pipeline configuration and the clustering driver that
//! ties the split, inlier clustering and outlier assignment together.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use ndarray::{Array2, Axis};

use crate::assign::{assign_outliers, ClusterModel};
use crate::error::{Error, Result};
use crate::ingest::{is_features_file, read_archive, read_features};
use crate::kmeans::{kmeans, pca_reduce, KMeansConfig};
use crate::outlier::{parse_tau, split_with_cosine, Partition, TAU_DBA};
use crate::preprocess::{cosine_from_gram, vectorize, FeatureMatrix, PreprocessConfig};
use crate::sparse::{self_express_with_gram, CodingMethod, CoefficientMatrix, SparseCodingConfig};
use crate::spectral::{
    affinity_from_coefficients, affinity_from_cosine_matrix, spectral_cluster_with_embedding, AffinityMatrix,
};

/// Inlier clustering method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// k-means directly on the feature vectors.
    KMeans,
    /// Spectral clustering on the cosine-similarity graph.
    CsSc,
    /// Spectral clustering on LASSO self-expression coefficients.
    LassoSsc,
    /// Spectral clustering on OMP self-expression coefficients.
    OmpSsc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::KMeans, Method::CsSc, Method::LassoSsc, Method::OmpSsc];

    pub fn name(self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::CsSc => "cs_sc",
            Method::LassoSsc => "lasso_ssc",
            Method::OmpSsc => "omp_ssc",
        }
    }

    fn coding(self) -> Option<CodingMethod> {
        match self {
            Method::LassoSsc => Some(CodingMethod::Lasso),
            Method::OmpSsc => Some(CodingMethod::Omp),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::Parameter(format!(
                "unknown method '{s}' (expected kmeans, cs_sc, lasso_ssc or omp_ssc)"
            ))
        })
    }
}

pub const DEFAULT_K_SWEEP: [usize; 3] = [20, 40, 60];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub method: Method,
    /// One run per entry.
    pub k: Vec<usize>,
    pub tau: f64,
    pub lambda: f64,
    pub denoise_eps: f64,
    pub f: usize,
    pub t: usize,
    pub seed: u64,
    pub export_embedding: bool,
    /// Also write the sparse coefficient matrix (SSC methods only).
    pub export_coefficients: bool,
    pub sparsity_k: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Dimension of the PCA projection exported for the k-means method.
    pub pca_dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let coding = SparseCodingConfig::default();
        let pre = PreprocessConfig::default();
        PipelineConfig {
            input: PathBuf::new(),
            output_dir: PathBuf::new(),
            method: Method::LassoSsc,
            k: DEFAULT_K_SWEEP.to_vec(),
            tau: TAU_DBA,
            lambda: coding.lambda,
            denoise_eps: coding.denoise_eps,
            f: pre.f,
            t: pre.t,
            seed: 0,
            export_embedding: false,
            export_coefficients: false,
            sparsity_k: coding.sparsity_k,
            max_iter: coding.max_iter,
            tol: coding.tol,
            pca_dim: 100,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parameter(format!(
            "invalid value '{value}' for {key} (expected true or false)"
        ))),
    }
}

/// Parses `20,40,60` (spaces allowed).
pub fn parse_k_list(value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|s| parse_num::<usize>("k", s.trim())).collect()
}

impl PipelineConfig {
    /// Sets one field from its textual form. Keys are the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "input" => self.input = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "method" => self.method = value.parse()?,
            "k" => self.k = parse_k_list(value)?,
            "tau" => self.tau = parse_tau(value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "denoise_eps" => self.denoise_eps = parse_num(key, value)?,
            "f" => self.f = parse_num(key, value)?,
            "t" => self.t = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "export_embedding" => self.export_embedding = parse_bool(key, value)?,
            "export_coefficients" => self.export_coefficients = parse_bool(key, value)?,
            "sparsity_k" => self.sparsity_k = parse_num(key, value)?,
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "pca_dim" => self.pca_dim = parse_num(key, value)?,
            _ => return Err(Error::Parameter(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(origin, format!("line {}", no + 1), "expected 'key = value'"))?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::Parameter(msg) => Error::Parameter(format!("{}:{}: {msg}", origin.display(), no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig { f: self.f, t: self.t }
    }

    pub fn coding(&self, method: CodingMethod) -> SparseCodingConfig {
        SparseCodingConfig {
            method,
            lambda: self.lambda,
            sparsity_k: self.sparsity_k,
            max_iter: self.max_iter,
            tol: self.tol,
            denoise_eps: self.denoise_eps,
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.preprocess().validate()?;
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(Error::Parameter(format!(
                "k must be a nonempty list of positive integers, got {:?}",
                self.k
            )));
        }
        if !(self.tau > -1.0 && self.tau <= 1.0) {
            return Err(Error::Parameter(format!("tau must lie in (-1, 1], got {}", self.tau)));
        }
        if self.pca_dim == 0 {
            return Err(Error::Parameter("pca_dim must be positive".into()));
        }
        if let Some(coding) = self.method.coding() {
            // sample count is checked later; 2 is the smallest valid one
            let mut c = self.coding(coding);
            c.sparsity_k = c.sparsity_k.min(1);
            c.validate(2)?;
        }
        Ok(())
    }
}

/// Reads a feature file as is, or an archive (binary file or CSV directory)
/// followed by preprocessing.
pub fn load_features(path: impl AsRef<Path>, pre: &PreprocessConfig) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    if is_features_file(path) {
        read_features(path)
    } else {
        vectorize(&read_archive(path)?, pre)
    }
}

/// One clustering run at a given `k`.
#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub model: ClusterModel,
    /// Ids and coordinates of the samples that were clustered: the spectral
    /// embedding for graph methods, a PCA projection for k-means.
    pub embedding: (Vec<String>, Array2<f64>),
}

/// Work shared by every `k` of a sweep.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub partition: Partition,
    /// Inliers taking part in clustering, as indices into the features.
    pub members: Vec<usize>,
    /// Inliers dropped for having no affinity edges.
    pub isolated: Vec<usize>,
    pub affinity: Option<AffinityMatrix>,
    pub coefficients: Option<CoefficientMatrix>,
}

fn sub_square(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(0), idx).select(Axis(1), idx)
}

/// Outlier split, then (for graph methods) the affinity over inliers with
/// isolated nodes moved to the outlier set.
pub fn prepare(features: &FeatureMatrix, cfg: &PipelineConfig) -> Result<Prepared> {
    let gram = features.gram();
    let cosine = cosine_from_gram(&gram);
    let mut partition = split_with_cosine(&cosine, cfg.tau)?;
    info!(
        "split at tau={}: {} inliers, {} outliers",
        cfg.tau,
        partition.inlier_idx.len(),
        partition.outlier_idx.len()
    );
    let inliers = partition.inlier_idx.clone();

    let (affinity, coefficients) = match cfg.method {
        Method::KMeans => (None, None),
        Method::CsSc => (Some(affinity_from_cosine_matrix(&sub_square(&cosine, &inliers))), None),
        Method::LassoSsc | Method::OmpSsc => {
            if inliers.len() < 2 {
                return Err(Error::Parameter(format!(
                    "only {} inliers at tau={}; self-expression needs at least 2",
                    inliers.len(),
                    cfg.tau
                )));
            }
            let sub = features.select(&inliers);
            let sub_gram = sub_square(&gram, &inliers);
            let coding = cfg.coding(cfg.method.coding().expect("graph method"));
            let y = self_express_with_gram(&sub, sub_gram.view(), &coding)?;
            (Some(affinity_from_coefficients(&y)), Some(y))
        }
    };

    let (members, isolated, affinity) = match affinity {
        Some(a) => {
            let local = a.isolated_nodes();
            if local.is_empty() {
                (inliers, Vec::new(), Some(a))
            } else {
                warn!(
                    "{} inliers have no affinity edges and are treated as outliers",
                    local.len()
                );
                let keep: Vec<usize> = (0..inliers.len()).filter(|i| local.binary_search(i).is_err()).collect();
                let members: Vec<usize> = keep.iter().map(|&i| inliers[i]).collect();
                let isolated: Vec<usize> = local.iter().map(|&i| inliers[i]).collect();
                partition.outlier_idx.extend_from_slice(&isolated);
                partition.outlier_idx.sort_unstable();
                partition.inlier_idx = members.clone();
                (members, isolated, Some(a.select(&keep)))
            }
        }
        None => (inliers, Vec::new(), None),
    };

    Ok(Prepared {
        partition,
        members,
        isolated,
        affinity,
        coefficients,
    })
}

/// Clusters the prepared inliers into `k` groups and assigns the outliers.
pub fn cluster_prepared(
    features: &FeatureMatrix,
    prep: &Prepared,
    cfg: &PipelineConfig,
    k: usize,
) -> Result<ClusterRun> {
    let n = prep.members.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "k={k} clusters requested but only {n} inliers are available"
        )));
    }
    let ids: Vec<String> = prep.members.iter().map(|&i| features.ids()[i].clone()).collect();
    let (labels, coords) = match &prep.affinity {
        Some(a) => {
            let (labels, emb) = spectral_cluster_with_embedding(a, k, cfg.seed)?;
            (labels, emb.coords)
        }
        None => {
            let points = features.data().select(Axis(1), &prep.members).reversed_axes();
            let km = kmeans(points.view(), &KMeansConfig::new(k, cfg.seed))?;
            if !km.converged {
                warn!("k-means stopped after {} iterations without converging", km.iterations);
            }
            let dim = cfg.pca_dim.min(n).min(features.d());
            (km.labels, pca_reduce(points.view(), dim)?)
        }
    };
    let mut model = assign_outliers(features, prep.partition.clone(), &labels, k, cfg.method)?;
    model.isolated = prep.isolated.clone();
    Ok(ClusterRun {
        model,
        embedding: (ids, coords),
    })
}

/// Full two-step clustering at a single `k`.
pub fn cluster(features: &FeatureMatrix, cfg: &PipelineConfig, k: usize) -> Result<ClusterRun> {
    let prep = prepare(features, cfg)?;
    cluster_prepared(features, &prep, cfg, k)
}
