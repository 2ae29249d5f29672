use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssc::ingest::{read_labels, read_truth};
use ssc::metrics::clustering_error;

fn ssc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssc"))
        .args(args)
        .output()
        .expect("spawn ssc")
}

fn ok(args: &[&str]) {
    let out = ssc(args);
    assert!(
        out.status.success(),
        "ssc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Relative path -> bytes for every file below `dir`.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn subspace_data(dir: &Path, outliers: usize) -> PathBuf {
    let out = dir.join("sub");
    let outliers = outliers.to_string();
    ok(&[
        "synth",
        "subspaces",
        "--n",
        "3",
        "--dim",
        "3",
        "--points",
        "50",
        "--noise",
        "0.01",
        "--outliers",
        &outliers,
        "--seed",
        "1",
        "--output",
        s(&out),
    ]);
    out
}

#[test]
fn lasso_pipeline_recovers_subspaces() {
    let tmp = tempfile::tempdir().unwrap();
    let data = subspace_data(tmp.path(), 0);
    let out = tmp.path().join("run");
    ok(&[
        "pipeline",
        "--input",
        s(&data.join("features.sscf")),
        "--output_dir",
        s(&out),
        "--method",
        "lasso_ssc",
        "--k",
        "3",
        "--seed",
        "1",
    ]);
    let labels = read_labels(out.join("labels.csv")).unwrap();
    let truth = read_truth(data.join("truth.csv")).unwrap();
    let pred: Vec<usize> = labels.iter().map(|r| r.label).collect();
    let t: Vec<usize> = truth.iter().map(|(_, l)| *l as usize).collect();
    assert!(clustering_error(&pred, &t).unwrap() <= 0.05);
    for f in [
        "features.sscf",
        "metrics.txt",
        "metrics.csv",
        "centroids/centroid_00.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn kmeans_single_cluster_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let data = subspace_data(tmp.path(), 0);
    let out = tmp.path().join("run");
    let res = ssc(&[
        "pipeline",
        "--input",
        s(&data.join("features.sscf")),
        "--output_dir",
        s(&out),
        "--method",
        "kmeans",
        "--k",
        "1",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("K >= 2"));
    assert!(!out.exists());
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn pipeline_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = subspace_data(tmp.path(), 5);
    let mut snaps = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        ok(&[
            "pipeline",
            "--input",
            s(&data.join("features.sscf")),
            "--output_dir",
            s(&out),
            "--method",
            "omp_ssc",
            "--sparsity_k",
            "3",
            "--k",
            "3,4",
            "--seed",
            "9",
            "--export_embedding",
            "--export_coefficients",
        ]);
        snaps.push(snapshot(&out));
    }
    assert!(snaps[0].contains_key(Path::new("k4/embedding.csv")));
    assert!(snaps[0].contains_key(Path::new("coefficients.csv")));
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn evaluate_reproduces_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let data = subspace_data(tmp.path(), 10);
    let out = tmp.path().join("run");
    ok(&[
        "pipeline",
        "--input",
        s(&data.join("features.sscf")),
        "--output_dir",
        s(&out),
        "--method",
        "cs_sc",
        "--k",
        "3",
        "--tau",
        "0.2",
    ]);
    let features = out.join("features.sscf");
    let labels = out.join("labels.csv");
    let res = ssc(&[
        "evaluate",
        "--labels",
        s(&labels),
        "--features",
        s(&features),
        "--method",
        "cs_sc",
    ]);
    assert!(res.status.success());
    let pipeline_report = fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert_eq!(String::from_utf8(res.stdout).unwrap(), pipeline_report);

    // swap label values 0 and 2
    let text = fs::read_to_string(&labels).unwrap();
    let permuted: String = text
        .lines()
        .map(|line| {
            let mut parts: Vec<String> = line.split(',').map(String::from).collect();
            parts[1] = match parts[1].as_str() {
                "0" => "2".into(),
                "2" => "0".into(),
                other => other.into(),
            };
            parts.join(",") + "\n"
        })
        .collect();
    let permuted_path = tmp.path().join("permuted.csv");
    fs::write(&permuted_path, permuted).unwrap();
    let report_path = tmp.path().join("permuted.txt");
    ok(&[
        "evaluate",
        "--labels",
        s(&permuted_path),
        "--features",
        s(&features),
        "--method",
        "cs_sc",
        "--output",
        s(&report_path),
    ]);
    assert_eq!(fs::read_to_string(&report_path).unwrap(), pipeline_report);

    let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
    let truncated_path = tmp.path().join("truncated.csv");
    fs::write(&truncated_path, truncated).unwrap();
    let res = ssc(&["evaluate", "--labels", s(&truncated_path), "--features", s(&features)]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn synth_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let mut snaps = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        ok(&[
            "synth",
            "segments",
            "--classes",
            "5",
            "--n",
            "40",
            "--seed",
            "1",
            "--output",
            s(&out),
        ]);
        ok(&[
            "synth",
            "subspaces",
            "--n",
            "3",
            "--dim",
            "3",
            "--points",
            "50",
            "--seed",
            "1",
            "--output",
            s(&out),
        ]);
        snaps.push(snapshot(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
    assert!(snaps[0].contains_key(Path::new("archive.ssca")));
    let res = ssc(&[
        "synth",
        "segments",
        "--classes",
        "6",
        "--n",
        "10",
        "--output",
        s(&tmp.path().join("c")),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn csv_archive_through_preprocess_and_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let seg = tmp.path().join("seg");
    ok(&[
        "synth",
        "segments",
        "--classes",
        "3",
        "--n",
        "30",
        "--seed",
        "2",
        "--format",
        "csv",
        "--output",
        s(&seg),
    ]);
    let features = tmp.path().join("f.sscf");
    ok(&[
        "preprocess",
        "--input",
        s(&seg.join("archive")),
        "--output",
        s(&features),
        "--f",
        "16",
        "--t",
        "16",
    ]);

    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# archive input with its own resize\ninput = {}\noutput_dir = {}\nmethod = lasso_ssc\nk = 3\nf = 16\nt = 16\ntau = 0.3\n",
            seg.join("archive").display(),
            tmp.path().join("from_cfg").display()
        ),
    )
    .unwrap();
    ok(&["pipeline", "--config", s(&cfg)]);
    // a flag overrides the file
    ok(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--input",
        s(&features),
        "--output_dir",
        s(&tmp.path().join("from_flag")),
    ]);
    assert_eq!(
        fs::read(tmp.path().join("from_cfg/labels.csv")).unwrap(),
        fs::read(tmp.path().join("from_flag/labels.csv")).unwrap()
    );

    let table = ssc(&[
        "metrics",
        s(&tmp.path().join("from_cfg/metrics.txt")),
        s(&tmp.path().join("from_flag/metrics.txt")),
    ]);
    assert!(table.status.success());
    let text = String::from_utf8(table.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("method,k,"));
    assert_eq!(lines[1], lines[2]);
}

#[test]
fn usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = subspace_data(tmp.path(), 0);
    let input = data.join("features.sscf");
    let out = tmp.path().join("o");
    for bad in [
        vec!["--method", "spectral"],
        vec!["--lambda", "-1"],
        vec!["--tau", "1.5"],
        vec!["--k", "0"],
        vec!["--k", "500"],
    ] {
        let mut args = vec!["pipeline", "--input", s(&input), "--output_dir", s(&out)];
        args.extend(bad.iter().copied());
        let res = ssc(&args);
        assert_eq!(
            res.status.code(),
            Some(2),
            "{bad:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let res = ssc(&[
        "pipeline",
        "--input",
        s(&tmp.path().join("missing")),
        "--output_dir",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let garbage = tmp.path().join("garbage.bin");
    fs::write(&garbage, b"not an archive").unwrap();
    let res = ssc(&["pipeline", "--input", s(&garbage), "--output_dir", s(&out)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("byte 0"));
    assert!(!out.exists());
}
