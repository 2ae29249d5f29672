use ndarray::Array2;
use proptest::prelude::*;

use ssc::assign::{assign_outliers, nearest_centroid};
use ssc::kmeans::{kmeans, KMeansConfig};
use ssc::metrics::{hmean_cosine_distance, pairwise_cosine_distances, report, std_cosine_distance};
use ssc::outlier::split;
use ssc::pipeline::{cluster, Method, PipelineConfig};
use ssc::preprocess::{vectorize, FeatureMatrix, PreprocessConfig};
use ssc::sparse::{self_express, SparseCodingConfig};
use ssc::synth::{generate_segments, generate_subspaces, SegmentSpec, SubspaceSpec};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(0.01f64..1.0, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn features(d: usize, n: usize) -> impl Strategy<Value = FeatureMatrix> {
    matrix(d, n).prop_map(move |m| {
        let ids = (0..n).map(|i| format!("x{i}")).collect();
        FeatureMatrix::from_unnormalized(m, ids, (d, 1)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn harmonic_mean_below_arithmetic(c in matrix(5, 6)) {
        let d = pairwise_cosine_distances(&c).unwrap();
        let am = d.iter().sum::<f64>() / d.len() as f64;
        let hm = hmean_cosine_distance(&c).unwrap();
        prop_assert!(hm <= am + 1e-12);
        prop_assert!((0.0..=2.0).contains(&hm));
    }

    #[test]
    fn metrics_ignore_scale_and_order(c in matrix(4, 5), scale in 0.1f64..10.0) {
        let scaled = &c * scale;
        let mut rev = c.clone();
        rev.invert_axis(ndarray::Axis(0));
        let h = hmean_cosine_distance(&c).unwrap();
        let s = std_cosine_distance(&c).unwrap();
        prop_assert!((hmean_cosine_distance(&scaled).unwrap() - h).abs() < 1e-12);
        prop_assert!((std_cosine_distance(&scaled).unwrap() - s).abs() < 1e-12);
        prop_assert_eq!(hmean_cosine_distance(&rev).unwrap(), h);
        prop_assert_eq!(std_cosine_distance(&rev).unwrap(), s);
    }

    #[test]
    fn assignment_ignores_positive_scaling(c in matrix(3, 4), x in prop::collection::vec(0.01f64..1.0, 4), a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let x = ndarray::Array1::from(x);
        let base = nearest_centroid(x.view(), &c).unwrap();
        let xs = &x * a;
        let cs = &c * b;
        prop_assert_eq!(nearest_centroid(xs.view(), &cs).unwrap(), base);
    }

    #[test]
    fn lloyd_never_increases_inertia(p in matrix(30, 3), k in 1usize..5, seed in 0u64..1000) {
        let r = kmeans(p.view(), &KMeansConfig::new(k, seed)).unwrap();
        for w in r.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.inertia_trace);
        }
        prop_assert!(r.labels.iter().all(|&l| l < k));
        let again = kmeans(p.view(), &KMeansConfig::new(k, seed)).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn coefficients_denoised_with_zero_diagonal(f in features(6, 10)) {
        let cfg = SparseCodingConfig { lambda: 0.05, ..Default::default() };
        let y = self_express(&f, &cfg).unwrap();
        for i in 0..10 {
            prop_assert_eq!(y.y[[i, i]], 0.0);
        }
        prop_assert!(y.y.iter().all(|v| *v == 0.0 || v.abs() >= cfg.denoise_eps));
    }

    #[test]
    fn outlier_labels_valid_and_inliers_untouched(f in features(5, 12), tau in 0.5f64..1.0) {
        let p = split(&f, tau).unwrap();
        prop_assume!(p.inlier_idx.len() >= 2);
        let inlier_labels: Vec<usize> = (0..p.inlier_idx.len()).map(|i| i % 2).collect();
        let m = assign_outliers(&f, p.clone(), &inlier_labels, 2, Method::KMeans).unwrap();
        for (pos, &i) in p.inlier_idx.iter().enumerate() {
            prop_assert_eq!(m.labels[i], inlier_labels[pos]);
        }
        prop_assert!(m.labels.iter().all(|&l| l < 2));
    }
}

#[test]
fn report_without_outliers_has_equal_halves() {
    let data = generate_subspaces(&SubspaceSpec::uniform(20, 3, 2, 15, 4)).unwrap();
    let cfg = PipelineConfig {
        method: Method::LassoSsc,
        tau: -0.99,
        ..Default::default()
    };
    let run = cluster(&data.features, &cfg, 3).unwrap();
    assert!(run.model.partition.outlier_idx.is_empty());
    let r = report(&data.features, &run.model).unwrap();
    assert_eq!(r.d_cos_hmean, r.d_cos_hmean_full);
    assert_eq!(r.d_cos_std, r.d_cos_std_full);
    assert_eq!(r.cluster_sizes.iter().sum::<usize>(), 45);
}

#[test]
fn every_method_runs_on_segments() {
    let spec = SegmentSpec {
        outlier_fraction: 0.1,
        ..SegmentSpec::new(60, 3, 3)
    };
    let (archive, _) = generate_segments(&spec).unwrap();
    let f = vectorize(&archive, &PreprocessConfig { f: 24, t: 24 }).unwrap();
    for method in Method::ALL {
        let cfg = PipelineConfig {
            method,
            sparsity_k: 4,
            ..Default::default()
        };
        let run = cluster(&f, &cfg, 3).unwrap();
        let r = report(&f, &run.model).unwrap();
        assert_eq!(r.cluster_sizes_full.iter().sum::<usize>(), 60, "{method}");
        assert!(r.d_cos_hmean > 0.0 && r.d_cos_hmean <= 2.0);
        assert_eq!(run.model.partition.n(), 60);
    }
}
