use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use ssc::assign::model_from_records;
use ssc::ingest::{
    read_labels, write_archive, write_archive_csv, write_centroids, write_embedding, write_features, write_labels,
    write_triplets, write_truth,
};
use ssc::metrics::{report, MetricsReport};
use ssc::pipeline::{cluster_prepared, load_features, prepare, Method, PipelineConfig};
use ssc::preprocess::PreprocessConfig;
use ssc::synth::{generate_segments, generate_subspaces, SegmentSpec, SubspaceSpec};
use ssc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ssc",
    version,
    about = "Two-step sparse subspace clustering of spectrogram segments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess, split, cluster, assign outliers and report metrics.
    Pipeline(Box<PipelineArgs>),
    /// Generate synthetic data with ground-truth labels.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Recompute the metrics report from a labels file and its features.
    Evaluate(EvaluateArgs),
    /// Turn a segment archive into a feature file.
    Preprocess(PreprocessArgs),
    /// Collect metrics reports into one CSV table.
    Metrics(MetricsArgs),
}

/// Every field is optional so that unset flags leave config-file values in
/// place.
#[derive(Args)]
struct PipelineArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Segment archive (binary file or CSV directory) or feature file.
    #[arg(long)]
    input: Option<String>,
    /// Filled only when the run succeeds; files of the same name are replaced.
    #[arg(long = "output_dir", visible_alias = "output-dir")]
    output_dir: Option<String>,
    /// kmeans, cs_sc, lasso_ssc or omp_ssc.
    #[arg(long)]
    method: Option<String>,
    /// Cluster count, or a comma-separated sweep such as 20,40,60.
    #[arg(long)]
    k: Option<String>,
    /// Similarity threshold, or a preset: dba (0.8), c57 (0.7).
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// LASSO penalty (default 0.3).
    #[arg(long)]
    lambda: Option<String>,
    /// Coefficients below this magnitude are zeroed (default 0.001).
    #[arg(long = "denoise_eps", visible_alias = "denoise-eps")]
    denoise_eps: Option<String>,
    /// Resized frequency bins (default 64).
    #[arg(long)]
    f: Option<String>,
    /// Resized time bins (default 64).
    #[arg(long)]
    t: Option<String>,
    /// Seed for k-means++ initialisation.
    #[arg(long)]
    seed: Option<String>,
    /// Write the spectral embedding (PCA projection for kmeans).
    #[arg(long = "export_embedding", visible_alias = "export-embedding")]
    export_embedding: bool,
    /// Write the sparse coefficient matrix (SSC methods).
    #[arg(long = "export_coefficients", visible_alias = "export-coefficients")]
    export_coefficients: bool,
    /// OMP atom budget per sample.
    #[arg(long = "sparsity_k", visible_alias = "sparsity-k")]
    sparsity_k: Option<String>,
    /// LASSO sweep limit.
    #[arg(long = "max_iter", visible_alias = "max-iter")]
    max_iter: Option<String>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// PCA dimension of the kmeans embedding export.
    #[arg(long = "pca_dim", visible_alias = "pca-dim")]
    pca_dim: Option<String>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let pairs = [
            ("input", &self.input),
            ("output_dir", &self.output_dir),
            ("method", &self.method),
            ("k", &self.k),
            ("tau", &self.tau),
            ("lambda", &self.lambda),
            ("denoise_eps", &self.denoise_eps),
            ("f", &self.f),
            ("t", &self.t),
            ("seed", &self.seed),
            ("sparsity_k", &self.sparsity_k),
            ("max_iter", &self.max_iter),
            ("tol", &self.tol),
            ("pca_dim", &self.pca_dim),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.export_embedding {
            cfg.export_embedding = true;
        }
        if self.export_coefficients {
            cfg.export_coefficients = true;
        }
        if cfg.input.as_os_str().is_empty() {
            return Err(Error::Parameter(
                "no input given (--input or 'input' in the config file)".into(),
            ));
        }
        if cfg.output_dir.as_os_str().is_empty() {
            return Err(Error::Parameter(
                "no output directory given (--output_dir or 'output_dir' in the config file)".into(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Union of random linear subspaces; writes features.sscf and truth.csv.
    Subspaces(SubspaceArgs),
    /// Contour-shaped segments; writes an archive and truth.csv.
    Segments(SegmentArgs),
}

#[derive(Args)]
struct SubspaceArgs {
    /// Number of subspaces.
    #[arg(long)]
    n: usize,
    /// Dimension of every subspace.
    #[arg(long)]
    dim: usize,
    /// Points per subspace.
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = 64)]
    ambient: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchiveFormat {
    Binary,
    Csv,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    n: usize,
    /// Contour classes, at most 5.
    #[arg(long)]
    classes: usize,
    #[arg(long = "outlier_fraction", visible_alias = "outlier-fraction", default_value_t = 0.0)]
    outlier_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ArchiveFormat::Binary)]
    format: ArchiveFormat,
    /// Output directory; receives archive.ssca (or archive/ for csv) and truth.csv.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    labels: PathBuf,
    /// Feature file, or an archive preprocessed with --f/--t.
    #[arg(long)]
    features: PathBuf,
    /// Method name recorded in the report.
    #[arg(long, default_value = "lasso_ssc")]
    method: String,
    #[arg(long, default_value_t = 64)]
    f: usize,
    #[arg(long, default_value_t = 64)]
    t: usize,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 64)]
    f: usize,
    #[arg(long, default_value_t = 64)]
    t: usize,
}

#[derive(Args)]
struct MetricsArgs {
    /// Report files written by `pipeline` or `evaluate`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Directory next to the final destination; its contents are moved into
/// place only after everything was written. Dropping it removes partial
/// output.
struct Staging {
    dir: tempfile::TempDir,
    dest: PathBuf,
}

impl Staging {
    fn new(dest: &Path) -> Result<Self> {
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| io_err(&parent, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".ssc-staging-")
            .tempdir_in(&parent)
            .map_err(|e| io_err(&parent, e))?;
        Ok(Staging {
            dir,
            dest: dest.to_path_buf(),
        })
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.dest).map_err(|e| io_err(&self.dest, e))?;
        let entries = fs::read_dir(self.dir.path()).map_err(|e| io_err(self.dir.path(), e))?;
        for entry in entries {
            let entry = entry.map_err(|e| io_err(self.dir.path(), e))?;
            let target = self.dest.join(entry.file_name());
            if target.is_dir() {
                fs::remove_dir_all(&target).map_err(|e| io_err(&target, e))?;
            } else if target.exists() {
                fs::remove_file(&target).map_err(|e| io_err(&target, e))?;
            }
            fs::rename(entry.path(), &target).map_err(|e| io_err(&target, e))?;
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn make_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let features = load_features(&cfg.input, &cfg.preprocess())?;
    info!("{} samples of dimension {}", features.n(), features.d());
    let stage = Staging::new(&cfg.output_dir)?;
    write_features(&features, stage.path().join("features.sscf"))?;

    let prep = prepare(&features, &cfg)?;
    if cfg.export_coefficients {
        if let Some(y) = &prep.coefficients {
            write_triplets(&y.y, stage.path().join("coefficients.csv"))?;
            // rows and columns index the inliers of the split, isolated
            // samples included
            let mut coded: Vec<usize> = prep.members.iter().chain(&prep.isolated).copied().collect();
            coded.sort_unstable();
            let text: String = coded.iter().map(|&i| format!("{}\n", features.ids()[i])).collect();
            write_text(&stage.path().join("coefficient_ids.txt"), &text)?;
        }
    }

    let sweep = cfg.k.len() > 1;
    let mut table = MetricsReport::csv_header() + "\n";
    for &k in &cfg.k {
        let run = cluster_prepared(&features, &prep, &cfg, k)?;
        let dir = if sweep {
            let d = stage.path().join(format!("k{k}"));
            make_dir(&d)?;
            d
        } else {
            stage.path().to_path_buf()
        };
        write_labels(&run.model, dir.join("labels.csv"))?;
        write_centroids(&run.model, dir.join("centroids"))?;
        if cfg.export_embedding {
            write_embedding(&run.embedding.0, &run.embedding.1, dir.join("embedding.csv"))?;
        }
        let rep = report(&features, &run.model)?;
        rep.write(dir.join("metrics.txt"))?;
        table += &rep.csv_row();
        table.push('\n');
        info!("k={k}: d_cos_hmean={} d_cos_std={}", rep.d_cos_hmean, rep.d_cos_std);
    }
    write_text(&stage.path().join("metrics.csv"), &table)?;
    stage.commit()
}

fn cmd_synth(cmd: &SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Subspaces(a) => {
            let spec = SubspaceSpec {
                ambient_dim: a.ambient,
                dims: vec![a.dim; a.n],
                points_per: a.points,
                noise_sigma: a.noise,
                outlier_count: a.outliers,
                seed: a.seed,
            };
            let data = generate_subspaces(&spec)?;
            let stage = Staging::new(&a.output)?;
            write_features(&data.features, stage.path().join("features.sscf"))?;
            write_truth(data.features.ids(), &data.labels, stage.path().join("truth.csv"))?;
            stage.commit()
        }
        SynthCommand::Segments(a) => {
            let spec = SegmentSpec {
                n: a.n,
                shape_classes: a.classes,
                outlier_fraction: a.outlier_fraction,
                seed: a.seed,
            };
            let (archive, labels) = generate_segments(&spec)?;
            let stage = Staging::new(&a.output)?;
            match a.format {
                ArchiveFormat::Binary => write_archive(&archive, stage.path().join("archive.ssca"))?,
                ArchiveFormat::Csv => write_archive_csv(&archive, stage.path().join("archive"))?,
            }
            let ids: Vec<String> = archive.ids().map(str::to_owned).collect();
            write_truth(&ids, &labels, stage.path().join("truth.csv"))?;
            stage.commit()
        }
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let features = load_features(&a.features, &PreprocessConfig { f: a.f, t: a.t })?;
    let records = read_labels(&a.labels)?;
    let model = model_from_records(&features, &records, method)?;
    let rep = report(&features, &model)?;
    match &a.output {
        Some(path) => rep.write(path),
        None => {
            print!("{}", rep.to_kv());
            Ok(())
        }
    }
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<()> {
    let features = load_features(&a.input, &PreprocessConfig { f: a.f, t: a.t })?;
    write_features(&features, &a.output)
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let mut table = MetricsReport::csv_header() + "\n";
    for path in &a.reports {
        table += &MetricsReport::read(path)?.csv_row();
        table.push('\n');
    }
    match &a.output {
        Some(path) => write_text(path, &table),
        None => std::io::stdout()
            .write_all(table.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Synth(c) => cmd_synth(c),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ssc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
