#ifndef SSC_H
#define SSC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SscMethod {
  SSC_METHOD_KMEANS = 0,
  SSC_METHOD_CS_SC = 1,
  SSC_METHOD_LASSO_SSC = 2,
  SSC_METHOD_OMP_SSC = 3,
} SscMethod;

/**
 * Result of a call. The numeric values match the exit codes of the `ssc`
 * command line tool.
 */
typedef enum SscStatus {
  SSC_STATUS_OK = 0,
  SSC_STATUS_IO = 1,
  SSC_STATUS_PARAMETER = 2,
  SSC_STATUS_VALIDATION = 3,
  SSC_STATUS_NUMERICAL = 4,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  SSC_STATUS_INVALID_ARGUMENT = 5,
  SSC_STATUS_PANIC = 6,
} SscStatus;

typedef enum SscSampleStatus {
  SSC_SAMPLE_STATUS_INLIER = 0,
  SSC_SAMPLE_STATUS_OUTLIER = 1,
  /**
   * Passed the threshold but had no edges in the affinity graph.
   */
  SSC_SAMPLE_STATUS_ISOLATED = 2,
} SscSampleStatus;

typedef struct SscArchive SscArchive;

typedef struct SscFeatures SscFeatures;

typedef struct SscModel SscModel;

/**
 * Clustering parameters. Start from [`ssc_config_default`].
 */
typedef struct SscConfig {
  enum SscMethod method;
  double tau;
  double lambda;
  double denoise_eps;
  size_t sparsity_k;
  size_t max_iter;
  double tol;
  uint64_t seed;
} SscConfig;

typedef struct SscMetrics {
  size_t k;
  size_t n_inliers;
  size_t n_outliers;
  size_t n_isolated;
  double d_cos_hmean;
  double d_cos_std;
  double d_cos_hmean_full;
  double d_cos_std_full;
} SscMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed
 * yet. The pointer stays valid until the next failing call on the same
 * thread.
 */
const char *ssc_last_error(void);

/**
 * Library version, a static nul-terminated string.
 */
const char *ssc_version(void);

struct SscConfig ssc_config_default(void);

/**
 * Reads a segment archive (binary file or CSV directory).
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SscStatus ssc_archive_read(const char *path, struct SscArchive **out);

/**
 * Number of segments, 0 for a null handle.
 *
 * # Safety
 * `archive` must be null or a live handle.
 */
size_t ssc_archive_len(const struct SscArchive *archive);

/**
 * # Safety
 * `archive` must be null or a handle not freed before.
 */
void ssc_archive_free(struct SscArchive *archive);

/**
 * Clips, resizes to `f x t` and normalizes every segment of `archive`.
 *
 * # Safety
 * `archive` must be a live handle and `out` a valid pointer.
 */
enum SscStatus ssc_features_from_archive(const struct SscArchive *archive,
                                         size_t f,
                                         size_t t,
                                         struct SscFeatures **out);

/**
 * Loads a features file, or an archive that is then preprocessed to `f x t`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SscStatus ssc_features_load(const char *path, size_t f, size_t t, struct SscFeatures **out);

/**
 * Builds features from `n` raw column vectors of length `d`
 * (`data[j * d + i]`). Columns are scaled to unit norm; sample ids are
 * `s0`, `s1`, ...
 *
 * # Safety
 * `data` must point to `d * n` readable doubles and `out` be valid.
 */
enum SscStatus ssc_features_from_columns(const double *data,
                                         size_t d,
                                         size_t n,
                                         struct SscFeatures **out);

/**
 * Feature dimension `d`, 0 for a null handle.
 *
 * # Safety
 * `features` must be null or a live handle.
 */
size_t ssc_features_dim(const struct SscFeatures *features);

/**
 * Number of samples `n`, 0 for a null handle.
 *
 * # Safety
 * `features` must be null or a live handle.
 */
size_t ssc_features_count(const struct SscFeatures *features);

/**
 * # Safety
 * `features` must be null or a handle not freed before.
 */
void ssc_features_free(struct SscFeatures *features);

/**
 * Marks samples whose best cosine match with another sample falls below
 * `tau`. Writes 1 (outlier) or 0 into `is_outlier[0..n]`.
 *
 * # Safety
 * `features` must be a live handle and `is_outlier` hold `len` bytes.
 */
enum SscStatus ssc_outlier_split(const struct SscFeatures *features,
                                 double tau,
                                 uint8_t *is_outlier,
                                 size_t len,
                                 size_t *n_outliers);

/**
 * Full two-step clustering into `k` clusters.
 *
 * # Safety
 * `features` must be a live handle, `config` null (defaults) or valid, and
 * `out` a valid pointer.
 */
enum SscStatus ssc_cluster(const struct SscFeatures *features,
                           const struct SscConfig *config,
                           size_t k,
                           struct SscModel **out);

/**
 * Number of clusters, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ssc_model_k(const struct SscModel *model);

/**
 * Number of labelled samples, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ssc_model_len(const struct SscModel *model);

/**
 * Copies one label per sample into `out[0..n]`.
 *
 * # Safety
 * `model` must be a live handle and `out` hold `len` elements.
 */
enum SscStatus ssc_model_labels(const struct SscModel *model, size_t *out, size_t len);

/**
 * Copies the status of every sample into `out[0..n]`.
 *
 * # Safety
 * `model` must be a live handle and `out` hold `len` elements.
 */
enum SscStatus ssc_model_status(const struct SscModel *model,
                                enum SscSampleStatus *out,
                                size_t len);

/**
 * Copies the `k x d` centroids, row-major, into `out`.
 *
 * # Safety
 * `model` must be a live handle and `out` hold `len` doubles.
 */
enum SscStatus ssc_model_centroids(const struct SscModel *model, double *out, size_t len);

/**
 * Centroid separation metrics of `model` over the features it was fit on.
 *
 * # Safety
 * Both handles must be live and `out` valid.
 */
enum SscStatus ssc_model_metrics(const struct SscModel *model,
                                 const struct SscFeatures *features,
                                 struct SscMetrics *out);

/**
 * Writes the `id,label,status` table.
 *
 * # Safety
 * `model` must be a live handle and `path` a nul-terminated string.
 */
enum SscStatus ssc_model_write_labels(const struct SscModel *model, const char *path);

/**
 * # Safety
 * `model` must be null or a handle not freed before.
 */
void ssc_model_free(struct SscModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSC_H */
