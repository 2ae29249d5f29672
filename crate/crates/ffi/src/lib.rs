//! C ABI over `ssc-core`.
//!
//! Objects cross the boundary as opaque handles (`SscArchive`, `SscFeatures`,
//! `SscModel`) that the caller releases with the matching `*_free`. Every
//! fallible call returns an [`SscStatus`]; on failure the message is kept
//! per thread and can be fetched with [`ssc_last_error`]. Panics never cross
//! the boundary, they are reported as `SSC_STATUS_PANIC`.
//!
//! Feature matrices are `d x n` with one sample per column. Buffers passed in
//! or out are column-major for features (`data[j * d + i]`) and row-major for
//! centroids (`out[c * d + i]`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ndarray::Array2;
use ssc::assign::ClusterModel;
use ssc::ingest::{read_archive, write_labels, SampleStatus};
use ssc::outlier;
use ssc::pipeline::{self, Method, PipelineConfig};
use ssc::preprocess::{vectorize, FeatureMatrix, PreprocessConfig};
use ssc::Error;

/// Result of a call. The numeric values match the exit codes of the `ssc`
/// command line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscStatus {
    Ok = 0,
    Io = 1,
    Parameter = 2,
    Validation = 3,
    Numerical = 4,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscMethod {
    Kmeans = 0,
    CsSc = 1,
    LassoSsc = 2,
    OmpSsc = 3,
}

impl From<SscMethod> for Method {
    fn from(m: SscMethod) -> Self {
        match m {
            SscMethod::Kmeans => Method::KMeans,
            SscMethod::CsSc => Method::CsSc,
            SscMethod::LassoSsc => Method::LassoSsc,
            SscMethod::OmpSsc => Method::OmpSsc,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscSampleStatus {
    Inlier = 0,
    Outlier = 1,
    /// Passed the threshold but had no edges in the affinity graph.
    Isolated = 2,
}

/// Clustering parameters. Start from [`ssc_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SscConfig {
    pub method: SscMethod,
    pub tau: f64,
    pub lambda: f64,
    pub denoise_eps: f64,
    pub sparsity_k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl SscConfig {
    fn to_pipeline(self) -> PipelineConfig {
        PipelineConfig {
            method: self.method.into(),
            tau: self.tau,
            lambda: self.lambda,
            denoise_eps: self.denoise_eps,
            sparsity_k: self.sparsity_k,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SscMetrics {
    pub k: usize,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub n_isolated: usize,
    pub d_cos_hmean: f64,
    pub d_cos_std: f64,
    pub d_cos_hmean_full: f64,
    pub d_cos_std_full: f64,
}

pub struct SscArchive(ssc::SegmentArchive);
pub struct SscFeatures(FeatureMatrix);
pub struct SscModel(ClusterModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SscStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            1 => SscStatus::Io,
            2 => SscStatus::Parameter,
            3 => SscStatus::Validation,
            _ => SscStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(SscStatus::InvalidArgument, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SscStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SscStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(invalid("path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(format!("{what} is null")))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return Err(invalid(format!("{what} holds {len} elements, {need} needed")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        Err(invalid("output handle pointer is null"))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null if none failed
/// yet. The pointer stays valid until the next failing call on the same
/// thread.
#[no_mangle]
pub extern "C" fn ssc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ssc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ssc_config_default() -> SscConfig {
    let d = PipelineConfig::default();
    SscConfig {
        method: SscMethod::LassoSsc,
        tau: d.tau,
        lambda: d.lambda,
        denoise_eps: d.denoise_eps,
        sparsity_k: d.sparsity_k,
        max_iter: d.max_iter,
        tol: d.tol,
        seed: d.seed,
    }
}

/// Reads a segment archive (binary file or CSV directory).
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssc_archive_read(path: *const c_char, out: *mut *mut SscArchive) -> SscStatus {
    guard(|| {
        check_out(out)?;
        let archive = read_archive(path_arg(path)?)?;
        put(out, SscArchive(archive))
    })
}

/// Number of segments, 0 for a null handle.
///
/// # Safety
/// `archive` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_archive_len(archive: *const SscArchive) -> usize {
    archive.as_ref().map_or(0, |a| a.0.len())
}

/// # Safety
/// `archive` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ssc_archive_free(archive: *mut SscArchive) {
    if !archive.is_null() {
        drop(Box::from_raw(archive));
    }
}

/// Clips, resizes to `f x t` and normalizes every segment of `archive`.
///
/// # Safety
/// `archive` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_from_archive(
    archive: *const SscArchive,
    f: usize,
    t: usize,
    out: *mut *mut SscFeatures,
) -> SscStatus {
    guard(|| {
        check_out(out)?;
        let archive = get(archive, "archive")?;
        let fm = vectorize(&archive.0, &PreprocessConfig { f, t })?;
        put(out, SscFeatures(fm))
    })
}

/// Loads a features file, or an archive that is then preprocessed to `f x t`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_load(
    path: *const c_char,
    f: usize,
    t: usize,
    out: *mut *mut SscFeatures,
) -> SscStatus {
    guard(|| {
        check_out(out)?;
        let fm = pipeline::load_features(path_arg(path)?, &PreprocessConfig { f, t })?;
        put(out, SscFeatures(fm))
    })
}

/// Builds features from `n` raw column vectors of length `d`
/// (`data[j * d + i]`). Columns are scaled to unit norm; sample ids are
/// `s0`, `s1`, ...
///
/// # Safety
/// `data` must point to `d * n` readable doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_from_columns(
    data: *const f64,
    d: usize,
    n: usize,
    out: *mut *mut SscFeatures,
) -> SscStatus {
    guard(|| {
        check_out(out)?;
        let len = d.checked_mul(n).ok_or_else(|| invalid("d * n overflows"))?;
        if data.is_null() && len > 0 {
            return Err(invalid("data is null"));
        }
        let values = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(data, len)
        };
        // column-major input is the row-major layout of the transpose
        let m = Array2::from_shape_vec((n, d), values.to_vec())
            .map_err(|e| invalid(e.to_string()))?
            .reversed_axes();
        let ids = (0..n).map(|j| format!("s{j}")).collect();
        let fm = FeatureMatrix::from_unnormalized(m.as_standard_layout().to_owned(), ids, (d, 1))?;
        put(out, SscFeatures(fm))
    })
}

/// Feature dimension `d`, 0 for a null handle.
///
/// # Safety
/// `features` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_dim(features: *const SscFeatures) -> usize {
    features.as_ref().map_or(0, |f| f.0.d())
}

/// Number of samples `n`, 0 for a null handle.
///
/// # Safety
/// `features` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_count(features: *const SscFeatures) -> usize {
    features.as_ref().map_or(0, |f| f.0.n())
}

/// # Safety
/// `features` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ssc_features_free(features: *mut SscFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// Marks samples whose best cosine match with another sample falls below
/// `tau`. Writes 1 (outlier) or 0 into `is_outlier[0..n]`.
///
/// # Safety
/// `features` must be a live handle and `is_outlier` hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ssc_outlier_split(
    features: *const SscFeatures,
    tau: f64,
    is_outlier: *mut u8,
    len: usize,
    n_outliers: *mut usize,
) -> SscStatus {
    guard(|| {
        let fm = &get(features, "features")?.0;
        let dst = out_slice(is_outlier, len, fm.n(), "is_outlier")?;
        let p = outlier::split(fm, tau)?;
        dst.fill(0);
        for &i in &p.outlier_idx {
            dst[i] = 1;
        }
        if !n_outliers.is_null() {
            *n_outliers = p.outlier_idx.len();
        }
        Ok(())
    })
}

/// Full two-step clustering into `k` clusters.
///
/// # Safety
/// `features` must be a live handle, `config` null (defaults) or valid, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssc_cluster(
    features: *const SscFeatures,
    config: *const SscConfig,
    k: usize,
    out: *mut *mut SscModel,
) -> SscStatus {
    guard(|| {
        check_out(out)?;
        let fm = &get(features, "features")?.0;
        let cfg = config.as_ref().copied().unwrap_or_else(|| ssc_config_default());
        let mut cfg = cfg.to_pipeline();
        cfg.k = vec![k];
        cfg.validate()?;
        let run = pipeline::cluster(fm, &cfg, k)?;
        put(out, SscModel(run.model))
    })
}

/// Number of clusters, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_k(model: *const SscModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.k)
}

/// Number of labelled samples, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_len(model: *const SscModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n())
}

/// Copies one label per sample into `out[0..n]`.
///
/// # Safety
/// `model` must be a live handle and `out` hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_labels(model: *const SscModel, out: *mut usize, len: usize) -> SscStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        out_slice(out, len, m.n(), "labels buffer")?.copy_from_slice(&m.labels);
        Ok(())
    })
}

/// Copies the status of every sample into `out[0..n]`.
///
/// # Safety
/// `model` must be a live handle and `out` hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_status(model: *const SscModel, out: *mut SscSampleStatus, len: usize) -> SscStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let dst = out_slice(out, len, m.n(), "status buffer")?;
        for (i, s) in dst.iter_mut().enumerate() {
            *s = match m.status(i) {
                SampleStatus::Inlier => SscSampleStatus::Inlier,
                SampleStatus::Outlier => SscSampleStatus::Outlier,
                SampleStatus::Isolated => SscSampleStatus::Isolated,
            };
        }
        Ok(())
    })
}

/// Copies the `k x d` centroids, row-major, into `out`.
///
/// # Safety
/// `model` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_centroids(model: *const SscModel, out: *mut f64, len: usize) -> SscStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let c = &m.centroids;
        let dst = out_slice(out, len, c.len(), "centroid buffer")?;
        for (d, v) in dst.iter_mut().zip(c.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Centroid separation metrics of `model` over the features it was fit on.
///
/// # Safety
/// Both handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_metrics(
    model: *const SscModel,
    features: *const SscFeatures,
    out: *mut SscMetrics,
) -> SscStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let fm = &get(features, "features")?.0;
        if out.is_null() {
            return Err(invalid("metrics output is null"));
        }
        let r = ssc::metrics::report(fm, m)?;
        *out = SscMetrics {
            k: r.k,
            n_inliers: r.n_inliers,
            n_outliers: r.n_outliers,
            n_isolated: r.n_isolated,
            d_cos_hmean: r.d_cos_hmean,
            d_cos_std: r.d_cos_std,
            d_cos_hmean_full: r.d_cos_hmean_full,
            d_cos_std_full: r.d_cos_std_full,
        };
        Ok(())
    })
}

/// Writes the `id,label,status` table.
///
/// # Safety
/// `model` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_write_labels(model: *const SscModel, path: *const c_char) -> SscStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        write_labels(m, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ssc_model_free(model: *mut SscModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
