//! Command-line front end: `train`, `prune`, `sweep`, `report` and `run`.
//!
//! Every command reads an optional `key = value` config file, lets flags
//! override individual keys, writes its outputs under `--out-dir`, and
//! records them in `manifest.txt` at the root of that directory. A manifest is
//! itself a valid config file, so `neuroprune run --config out/manifest.txt`
//! repeats a pipeline.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O or unreadable input, 4 numeric
//! failure, 5 invariant violation.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, degradation_report};
use crate::config::Config;
use crate::data::{self, Dataset, MnistOptions, ShapeEncoding, ShapeKind, SplitKind};
use crate::model_io::{self, write_atomic};
use crate::net::{Network, NeuronId};
use crate::pruning::{
    iterative_reranking, single_overall_ranking, Algorithm, Criterion, CriterionKind, PruneOptions, PruneTrace,
    StoppingRule, ThresholdMode,
};
use crate::train::{train, TrainConfig};
use crate::{Error, Result};

/// Environment variable naming the directory searched for MNIST files.
pub const DATA_DIR_ENV: &str = "NEUROPRUNE_DATA_DIR";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Shape(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io { .. } | Error::Parse(_) | Error::Version { .. } => EXIT_IO,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Invariant(_) | Error::StaleGradients { .. } => EXIT_INVARIANT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "neuroprune", version, about = "Whole-neuron pruning experiments on sigmoid MLPs")]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores). Never changes outputs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a network and write model.json plus a training report.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// Model output path (default: <out-dir>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Prune a trained model and write the removal trace.
    Prune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        prune: PruneArgs,
        /// Also write the pruned model.
        #[arg(long)]
        save_pruned: bool,
    },
    /// Sweep neuron gains and write one curve per neuron.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated `layer:index` list.
        #[arg(long, conflicts_with = "from_trace")]
        neurons: Option<String>,
        /// Sweep the neurons removed at steps 1, 1+every, ... of this trace.
        #[arg(long)]
        from_trace: Option<PathBuf>,
        #[arg(long)]
        every: Option<usize>,
        /// Use the 0.01 grid instead of the 0.001 grid.
        #[arg(long)]
        coarse: bool,
    },
    /// Compare traces of one model and dataset.
    Report {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Allowed accuracy drop for max-removals-within-tolerance.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        /// Fraction of each trace counted in the layer histogram.
        #[arg(long, default_value_t = 0.25)]
        layer_prefix: f64,
    },
    /// Train, prune under every configured criterion, optionally sweep, and report.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    out_dir: PathBuf,
    /// Base `key = value` config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// mnist, cosine, diamond or random-shape.
    #[arg(long = "data")]
    kind: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
    /// Output width of the shape tasks: 2 or 10.
    #[arg(long)]
    shape_outputs: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    preset: Option<String>,
    /// Hidden sizes, e.g. 2x50 or 30-20.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_accuracy: Option<f64>,
}

#[derive(Debug, Args)]
struct PruneArgs {
    /// brute, t1 or t2.
    #[arg(long)]
    criterion: Option<String>,
    /// single or iterative.
    #[arg(long)]
    algorithm: Option<String>,
    /// count=N, fraction=F, accuracy_floor=A or error_ceiling=E.
    #[arg(long)]
    stop: Option<String>,
    /// none, mean or median.
    #[arg(long)]
    threshold: Option<String>,
    /// Split the criterion is computed on: train or test.
    #[arg(long)]
    ranking_split: Option<String>,
}

fn put<T: ToString>(cfg: &mut Config, key: &str, value: &Option<T>) -> Result<()> {
    if let Some(v) = value {
        cfg.set(key, v.to_string())?;
    }
    Ok(())
}

fn base_config(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let d = &common.data;
    put(&mut cfg, "data.kind", &d.kind)?;
    put(&mut cfg, "data.samples", &d.samples)?;
    put(&mut cfg, "data.seed", &d.data_seed)?;
    put(&mut cfg, "data.images", &d.mnist_images.as_ref().map(|p| p.display()))?;
    put(&mut cfg, "data.labels", &d.mnist_labels.as_ref().map(|p| p.display()))?;
    put(&mut cfg, "data.outputs", &d.shape_outputs)?;
    Ok(cfg)
}

impl TrainArgs {
    fn apply(&self, cfg: &mut Config) -> Result<()> {
        put(cfg, "train.preset", &self.preset)?;
        put(cfg, "train.hidden", &self.hidden)?;
        put(cfg, "train.learning_rate", &self.learning_rate)?;
        put(cfg, "train.epochs", &self.epochs)?;
        put(cfg, "train.batch_size", &self.batch_size)?;
        put(cfg, "train.seed", &self.seed)?;
        put(cfg, "train.target_accuracy", &self.target_accuracy)
    }
}

impl PruneArgs {
    fn apply(&self, cfg: &mut Config) -> Result<()> {
        put(cfg, "prune.criteria", &self.criterion)?;
        put(cfg, "prune.algorithms", &self.algorithm)?;
        put(cfg, "prune.stop", &self.stop)?;
        put(cfg, "prune.threshold", &self.threshold)?;
        put(cfg, "prune.ranking_split", &self.ranking_split)
    }
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train { common, train, model } => {
            let mut cfg = base_config(&common)?;
            train.apply(&mut cfg)?;
            let out = cmd_train(&cfg, &common.out_dir, model.as_deref())?;
            println!("model: {}", out.display());
        }
        Command::Prune {
            common,
            model,
            prune,
            save_pruned,
        } => {
            let mut cfg = base_config(&common)?;
            prune.apply(&mut cfg)?;
            for p in cmd_prune(&cfg, &model, &common.out_dir, save_pruned)? {
                println!("trace: {}", p.display());
            }
        }
        Command::Sweep {
            common,
            model,
            neurons,
            from_trace,
            every,
            coarse,
        } => {
            let mut cfg = base_config(&common)?;
            put(&mut cfg, "sweep.every", &every)?;
            if coarse {
                cfg.set("sweep.grid", "coarse")?;
            }
            let target = match (neurons, from_trace) {
                (Some(spec), None) => SweepTarget::Neurons(parse_neuron_list(&spec)?),
                (None, Some(path)) => SweepTarget::Trace(path),
                _ => {
                    return Err(Error::InvalidArgument(
                        "sweep needs --neurons or --from-trace".into(),
                    ))
                }
            };
            let files = cmd_sweep(&cfg, &model, &target, &common.out_dir)?;
            println!("{} sweep files written", files.len());
        }
        Command::Report {
            out_dir,
            traces,
            tolerance,
            layer_prefix,
        } => {
            for p in cmd_report(&traces, &out_dir, tolerance, layer_prefix)? {
                println!("report: {}", p.display());
            }
        }
        Command::Run { common } => {
            let cfg = base_config(&common)?;
            let m = cmd_run(&cfg, &common.out_dir)?;
            println!("{} files written, manifest at {}", m.files.len(), common.out_dir.join(MANIFEST_FILE).display());
        }
    }
    Ok(())
}

/// Builds the dataset described by the `data.` keys.
///
/// `data.kind` falls back to the dataset named by `train.preset`. MNIST paths
/// default to files found in `$NEUROPRUNE_DATA_DIR` (or `./data`), directly or
/// under `mnist/`.
pub fn dataset_from_config(cfg: &Config) -> Result<Dataset> {
    let kind = match cfg.get("data.kind") {
        Some(k) => k.to_string(),
        None => match cfg.get("train.preset").and_then(|p| p.split_once('-')) {
            Some(("shape", _)) => "diamond".to_string(),
            Some((k, _)) => k.to_string(),
            None => return Err(Error::InvalidArgument("data.kind is not set".into())),
        },
    };
    let seed = cfg.get_parsed("data.seed")?.unwrap_or(0);
    let samples: Option<usize> = cfg.get_parsed("data.samples")?;
    match kind.as_str() {
        "cosine" => data::gen_cosine(samples.unwrap_or(1000), seed),
        "mnist" => {
            let images = match cfg.get("data.images") {
                Some(p) => PathBuf::from(p),
                None => find_data_file(&["train-images-idx3-ubyte", "mnist-5k-images-idx3-ubyte"])?,
            };
            let labels = match cfg.get("data.labels") {
                Some(p) => PathBuf::from(p),
                None => find_data_file(&["train-labels-idx1-ubyte", "mnist-5k-labels-idx1-ubyte"])?,
            };
            let opts = MnistOptions {
                subset: samples.unwrap_or(5000),
                seed,
                ..MnistOptions::default()
            };
            data::load_mnist_idx(&images, &labels, &opts)
        }
        other => {
            let shape: ShapeKind = other.parse()?;
            let encoding = match cfg.get_parsed::<usize>("data.outputs")?.unwrap_or(2) {
                2 => ShapeEncoding::TwoClass,
                10 => ShapeEncoding::TenSlot,
                n => return Err(Error::InvalidArgument(format!("shape tasks have 2 or 10 outputs, not {n}"))),
            };
            data::gen_shape(shape, samples.unwrap_or(2000), seed, encoding)
        }
    }
}

fn find_data_file(stems: &[&str]) -> Result<PathBuf> {
    let root = std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from);
    for dir in [root.clone(), root.join("mnist")] {
        for stem in stems {
            for name in [stem.to_string(), format!("{stem}.gz")] {
                let p = dir.join(name);
                if p.is_file() {
                    return Ok(p);
                }
            }
        }
    }
    Err(Error::io(
        root.join(stems[0]),
        std::io::Error::new(std::io::ErrorKind::NotFound, format!("no MNIST file found (set {DATA_DIR_ENV})")),
    ))
}

/// Record of what a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub config: Config,
    pub dataset_id: Option<String>,
    /// Paths relative to the output directory.
    pub files: BTreeSet<String>,
    /// `(stage, seconds)`, informational only.
    pub wall_times: Vec<(String, f64)>,
}

impl RunManifest {
    /// Loads the manifest in `dir`, or an empty one.
    pub fn load_or_default(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut m = RunManifest {
            config: Config::parse(&text)?,
            ..Self::default()
        };
        for line in text.lines() {
            if let Some(f) = line.strip_prefix("# file=") {
                m.files.insert(f.to_string());
            } else if let Some(id) = line.strip_prefix("# dataset_id=") {
                m.dataset_id = Some(id.to_string());
            }
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# neuroprune run manifest\n");
        let _ = writeln!(out, "# tool_version={}", env!("CARGO_PKG_VERSION"));
        if let Some(id) = &self.dataset_id {
            let _ = writeln!(out, "# dataset_id={id}");
        }
        for f in &self.files {
            let _ = writeln!(out, "# file={f}");
        }
        for (stage, secs) in &self.wall_times {
            let _ = writeln!(out, "# wall_time.{stage}={secs:.3}");
        }
        out.push_str(&self.config.to_text());
        out
    }

    fn merge_config(&mut self, cfg: &Config) {
        for (k, v) in cfg.entries() {
            self.config.set(k, v).expect("keys of a parsed config are valid");
        }
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_FILE), self.to_text().as_bytes())
    }
}

fn record(dir: &Path, cfg: &Config, ds: Option<&Dataset>, files: &[PathBuf], stage: &str, start: Instant) -> Result<()> {
    let mut m = RunManifest::load_or_default(dir)?;
    m.merge_config(cfg);
    if let Some(ds) = ds {
        m.dataset_id = Some(ds.id().to_string());
    }
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(f);
        m.files.insert(rel.display().to_string());
    }
    m.wall_times.push((stage.to_string(), start.elapsed().as_secs_f64()));
    m.save(dir)
}

/// Trains per the `train.` keys; writes the model and `train_report.tsv`.
pub fn cmd_train(cfg: &Config, out_dir: &Path, model_path: Option<&Path>) -> Result<PathBuf> {
    let start = Instant::now();
    let tc = TrainConfig::from_config(cfg)?;
    let ds = dataset_from_config(cfg)?;
    let (net, report) = train(&tc, &ds)?;
    let model = model_path.map_or_else(|| out_dir.join("model.json"), Path::to_path_buf);
    model_io::save(&net, &model)?;
    let report_path = out_dir.join("train_report.tsv");
    write_atomic(&report_path, report.to_tsv().as_bytes())?;
    record(out_dir, cfg, Some(&ds), &[model.clone(), report_path], "train", start)?;
    Ok(model)
}

fn list<T: std::str::FromStr<Err = Error>>(cfg: &Config, key: &str, default: &str) -> Result<Vec<T>> {
    cfg.get(key)
        .unwrap_or(default)
        .split(',')
        .map(|s| s.trim().parse())
        .collect()
}

/// Prunes a copy of `net` under every configured (criterion, algorithm) pair.
fn prune_all(cfg: &Config, net: &Network, ds: &Dataset) -> Result<Vec<(PruneTrace, Network)>> {
    let kinds: Vec<CriterionKind> = list(cfg, "prune.criteria", "brute")?;
    let algorithms: Vec<Algorithm> = list(cfg, "prune.algorithms", "iterative")?;
    let stop: StoppingRule = cfg.get("prune.stop").unwrap_or("fraction=1").parse()?;
    let threshold: ThresholdMode = cfg.get("prune.threshold").unwrap_or("none").parse()?;
    let ranking_split: SplitKind = cfg.get("prune.ranking_split").unwrap_or("train").parse()?;
    let opts = PruneOptions { stop, ranking_split };
    let mut out = Vec::new();
    for &algorithm in &algorithms {
        for &kind in &kinds {
            let criterion = Criterion::new(kind).with_threshold(threshold);
            let mut pruned = net.clone();
            let trace = match algorithm {
                Algorithm::Single => single_overall_ranking(&mut pruned, ds, criterion, &opts)?,
                Algorithm::Iterative => iterative_reranking(&mut pruned, ds, criterion, &opts)?,
            };
            out.push((trace, pruned));
        }
    }
    Ok(out)
}

/// Prunes the model at `model_path`; writes one trace per configured criterion.
pub fn cmd_prune(cfg: &Config, model_path: &Path, out_dir: &Path, save_pruned: bool) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let net = model_io::load(model_path)?;
    let ds = dataset_from_config(cfg)?;
    let mut files = Vec::new();
    for (trace, pruned) in prune_all(cfg, &net, &ds)? {
        let path = out_dir.join(analysis::artifact_file_name(&trace, "trace"));
        write_atomic(&path, trace.to_tsv().as_bytes())?;
        files.push(path);
        if save_pruned {
            let path = out_dir.join(format!("{}.pruned.json", trace.file_stem()));
            model_io::save(&pruned, &path)?;
            files.push(path);
        }
    }
    record(out_dir, cfg, Some(&ds), &files, "prune", start)?;
    Ok(files)
}

pub enum SweepTarget {
    Neurons(Vec<NeuronId>),
    Trace(PathBuf),
}

/// Parses `1:3,2:0`.
pub fn parse_neuron_list(spec: &str) -> Result<Vec<NeuronId>> {
    let ids = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<NeuronId>>>()?;
    if ids.is_empty() {
        return Err(Error::InvalidArgument("empty neuron list".into()));
    }
    Ok(ids)
}

fn grid_from_config(cfg: &Config) -> Result<Vec<f64>> {
    match cfg.get("sweep.grid").unwrap_or("fine") {
        "fine" => Ok(analysis::fine_grid()),
        "coarse" => Ok(analysis::coarse_grid()),
        other => Err(Error::InvalidArgument(format!("sweep.grid must be fine or coarse, not {other:?}"))),
    }
}

/// Gain sweeps on the test split; one file per neuron.
pub fn cmd_sweep(cfg: &Config, model_path: &Path, target: &SweepTarget, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let net = model_io::load(model_path)?;
    let ds = dataset_from_config(cfg)?;
    let grid = grid_from_config(cfg)?;
    let mut files = Vec::new();
    match target {
        SweepTarget::Neurons(ids) => {
            for &id in ids {
                let curve = analysis::gain_sweep(&net, ds.test(), id, &grid)?;
                let name = format!(
                    "{}_{}_{}.sweep-l{}n{}.tsv",
                    ds.name(),
                    net.architecture(),
                    net.rng_seed(),
                    id.layer,
                    id.index
                );
                let path = out_dir.join(name);
                write_atomic(&path, curve.to_tsv().as_bytes())?;
                files.push(path);
            }
        }
        SweepTarget::Trace(trace_path) => {
            let text = std::fs::read_to_string(trace_path).map_err(|e| Error::io(trace_path, e))?;
            let trace = PruneTrace::from_tsv(&text)?;
            files = sweep_trace(cfg, &net, &ds, &trace, &grid, out_dir)?;
        }
    }
    record(out_dir, cfg, Some(&ds), &files, "sweep", start)?;
    Ok(files)
}

fn sweep_trace(
    cfg: &Config,
    net: &Network,
    ds: &Dataset,
    trace: &PruneTrace,
    grid: &[f64],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let every = cfg.get_parsed("sweep.every")?.unwrap_or(analysis::SWEEP_EVERY);
    let mut files = Vec::new();
    for s in analysis::sweeps_from_trace(net, ds.test(), trace, every, grid)? {
        let kind = format!("sweep-s{}-l{}n{}", s.step, s.curve.neuron.layer, s.curve.neuron.index);
        let path = out_dir.join(analysis::artifact_file_name(trace, &kind));
        write_atomic(&path, s.curve.to_tsv().as_bytes())?;
        files.push(path);
    }
    Ok(files)
}

fn report_stem(traces: &[PruneTrace]) -> String {
    let h = &traces[0].header;
    let algorithms: BTreeSet<&str> = traces.iter().map(|t| t.header.algorithm.as_str()).collect();
    let algorithms: Vec<&str> = algorithms.into_iter().collect();
    format!("{}_{}_compare_{}_{}", h.dataset, h.architecture, algorithms.join("+"), h.model_seed)
}

fn write_report(traces: &[PruneTrace], out_dir: &Path, tolerance: f64, layer_prefix: f64) -> Result<Vec<PathBuf>> {
    let report = degradation_report(traces, tolerance, layer_prefix)?;
    let stem = report_stem(traces);
    let curves = out_dir.join(format!("{stem}.report.tsv"));
    let summary = out_dir.join(format!("{stem}.summary.tsv"));
    write_atomic(&curves, report.curves_tsv().as_bytes())?;
    write_atomic(&summary, report.summary_tsv().as_bytes())?;
    Ok(vec![curves, summary])
}

/// Degradation curves and summary for a set of trace files.
pub fn cmd_report(trace_paths: &[PathBuf], out_dir: &Path, tolerance: f64, layer_prefix: f64) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let traces = trace_paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            PruneTrace::from_tsv(&text)
        })
        .collect::<Result<Vec<_>>>()?;
    let files = write_report(&traces, out_dir, tolerance, layer_prefix)?;
    record(out_dir, &Config::default(), None, &files, "report", start)?;
    Ok(files)
}

/// The whole pipeline from one config: train, prune under every configured
/// criterion and algorithm, sweep if `sweep.enabled = true`, then report.
pub fn cmd_run(cfg: &Config, out_dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let tc = TrainConfig::from_config(cfg)?;
    let ds = dataset_from_config(cfg)?;
    let mut m = RunManifest {
        config: cfg.clone(),
        dataset_id: Some(ds.id().to_string()),
        ..RunManifest::default()
    };
    let mut files = Vec::new();

    let (net, report) = train(&tc, &ds)?;
    let model = out_dir.join("model.json");
    model_io::save(&net, &model)?;
    let report_path = out_dir.join("train_report.tsv");
    write_atomic(&report_path, report.to_tsv().as_bytes())?;
    files.extend([model, report_path]);
    m.wall_times.push(("train".into(), start.elapsed().as_secs_f64()));

    let traces: Vec<PruneTrace> = prune_all(cfg, &net, &ds)?.into_iter().map(|(t, _)| t).collect();
    for t in &traces {
        let path = out_dir.join(analysis::artifact_file_name(t, "trace"));
        write_atomic(&path, t.to_tsv().as_bytes())?;
        files.push(path);
    }
    m.wall_times.push(("prune".into(), start.elapsed().as_secs_f64()));

    if cfg.get_parsed::<bool>("sweep.enabled")?.unwrap_or(false) {
        let grid = grid_from_config(cfg)?;
        for t in &traces {
            files.extend(sweep_trace(cfg, &net, &ds, t, &grid, out_dir)?);
        }
        m.wall_times.push(("sweep".into(), start.elapsed().as_secs_f64()));
    }

    let tolerance = cfg.get_parsed("prune.tolerance")?.unwrap_or(0.02);
    let layer_prefix = cfg.get_parsed("prune.layer_prefix")?.unwrap_or(0.25);
    files.extend(write_report(&traces, out_dir, tolerance, layer_prefix)?);
    m.wall_times.push(("report".into(), start.elapsed().as_secs_f64()));

    for f in &files {
        m.files.insert(f.strip_prefix(out_dir).unwrap_or(f).display().to_string());
    }
    m.save(out_dir)?;
    Ok(m)
}
