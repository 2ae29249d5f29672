//! Two-step sparse subspace clustering for spectrogram segments.
//!
//! Segments are clipped, resized and flattened to unit vectors
//! ([`preprocess`]), split into inliers and outliers by their best cosine
//! match ([`outlier`]), the inliers are clustered ([`pipeline::Method`]) and
//! every outlier joins its most similar centroid ([`assign`]). Cluster
//! diversity is summarized by inter-centroid cosine distances ([`metrics`]).
//!
//! ```
//! use ssc::pipeline::{cluster, Method, PipelineConfig};
//! use ssc::synth::{generate_subspaces, SubspaceSpec};
//!
//! let data = generate_subspaces(&SubspaceSpec::uniform(20, 2, 2, 15, 1)).unwrap();
//! let cfg = PipelineConfig { method: Method::LassoSsc, tau: 0.0, ..Default::default() };
//! let run = cluster(&data.features, &cfg, 2).unwrap();
//! assert_eq!(run.model.labels.len(), 30);
//! ```

// `!(x > a)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod error;
pub mod ingest;
pub mod kmeans;
pub mod metrics;
pub mod outlier;
pub mod pipeline;
pub mod preprocess;
pub mod sparse;
pub mod spectral;
pub mod synth;

pub use assign::ClusterModel;
pub use error::{Error, Result};
pub use ingest::{SegmentArchive, SpectroSegment};
pub use metrics::MetricsReport;
pub use outlier::Partition;
pub use pipeline::{Method, PipelineConfig};
pub use preprocess::{FeatureMatrix, PreprocessConfig};
