//! Command-line pipeline: dataset synthesis and conversion, feature
//! extraction, training, evaluation, throughput benchmarking and the
//! latency-accuracy sweep.
//!
//! Parameters resolve from flags, then a flat `key=value` config file
//! (same names as the long flags), then built-in defaults; the fully
//! resolved configuration is echoed into every metrics artifact. Exit
//! codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use crate::classifier::{read_model, train_linear_svm, write_model, SvmHyper};
use crate::descriptor::{HatsParams, Mode};
use crate::event::SensorGeometry;
use crate::io::{
    read_events, read_features, read_labels, write_events, write_features, write_labels, Format,
};
use crate::pipeline::{
    bench_extraction, collect_labels, evaluate, extract_features, load_dataset_dir, select_labels,
    select_rows, stratified_split, sweep_latency, write_dataset_dir, BenchRun, SweepRow,
};
use crate::surface::SurfaceParams;
use crate::synth::{two_class_dataset, NoiseSpec};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "hats", version, about = "Event-camera HATS feature pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class moving-edge dataset.
    Synth(SynthArgs),
    /// Convert a single event file between formats.
    Convert(ConvertArgs),
    /// Extract HATS features from a dataset directory.
    Extract(ExtractArgs),
    /// Train a linear SVM on extracted features.
    Train(TrainArgs),
    /// Evaluate a trained model; writes a metrics report.
    Eval(EvalArgs),
    /// Benchmark feature-extraction throughput.
    Bench(BenchArgs),
    /// Accuracy as a function of event-window duration.
    SweepLatency(SweepArgs),
}

/// Flags shared across subcommands; every value may also come from the
/// config file under the same name.
#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key=value config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cell side length K in pixels.
    #[arg(long)]
    k: Option<u16>,
    /// Surface neighborhood radius.
    #[arg(long)]
    rho: Option<u16>,
    /// Decay constant in microseconds.
    #[arg(long)]
    tau: Option<f64>,
    /// Temporal window length in microseconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of stacked feature windows.
    #[arg(long)]
    windows: Option<u32>,
    /// faithful | exact
    #[arg(long)]
    mode: Option<String>,
    /// off | l2:<cells>
    #[arg(long = "block-norm")]
    block_norm: Option<String>,
    /// SVM regularization strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// SVM training epochs.
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for extraction (1 = sequential, 0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Benchmark repetitions.
    #[arg(long)]
    repeat: Option<u32>,
    /// canonical-binary | csv | nmnist
    #[arg(long)]
    format: Option<String>,
    /// Stratified train fraction for splits.
    #[arg(long = "train-fraction")]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Samples per class.
    #[arg(long = "per-class", default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = 32)]
    width: u16,
    #[arg(long, default_value_t = 32)]
    height: u16,
    /// Poisson background rate in events per second.
    #[arg(long = "noise-rate", default_value_t = 1000.0)]
    noise_rate: f64,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long = "input-format")]
    input_format: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Dataset directory.
    #[arg(long)]
    input: PathBuf,
    /// Output feature file; labels go to `<out>.labels` when present.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long)]
    features: PathBuf,
    /// Label sidecar; defaults to `<features>.labels`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long = "model-out")]
    model_out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Metrics report path (JSON); stdout when omitted.
    #[arg(long = "metrics-out")]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Dataset directory.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "metrics-out")]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Dataset directory.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated window durations in microseconds, ascending.
    #[arg(long)]
    durations: String,
    /// Train/eval repetitions to average per duration.
    #[arg(long, default_value_t = 5)]
    repetitions: u32,
    /// Output CSV: duration_us,accuracy,auc.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "metrics-out")]
    metrics_out: Option<PathBuf>,
}

/// Fully resolved run parameters plus their provenance echo.
struct RunConfig {
    hats: HatsParams,
    windows: u32,
    hyper: SvmHyper,
    seed: u64,
    threads: usize,
    repeat: u32,
    format: Format,
    train_fraction: f64,
    echo: BTreeMap<String, String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<crate::pipeline::PipelineError> for CliError {
    fn from(e: crate::pipeline::PipelineError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::io::FormatError> for CliError {
    fn from(e: crate::io::FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::classifier::ClassifierError> for CliError {
    fn from(e: crate::classifier::ClassifierError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config file {} line {}: expected key=value",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn resolve<T: std::str::FromStr + Clone>(
    flag: &Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    if let Some(raw) = file.get(key) {
        return raw
            .parse()
            .map_err(|_| CliError::Usage(format!("config key '{key}': bad value '{raw}'")));
    }
    Ok(default)
}

impl RunConfig {
    fn resolve(common: &CommonOpts) -> Result<RunConfig, CliError> {
        let file = match &common.config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        let k = resolve(&common.k, &file, "k", 10)?;
        let rho = resolve(&common.rho, &file, "rho", 3)?;
        let tau = resolve(&common.tau, &file, "tau", 1e9)?;
        let dt = resolve(&common.dt, &file, "dt", 1e5)?;
        let windows = resolve(&common.windows, &file, "windows", 1)?;
        let mode_s = resolve(&common.mode, &file, "mode", "faithful".to_string())?;
        let block_s = resolve(&common.block_norm, &file, "block-norm", "off".to_string())?;
        let lambda = resolve(&common.lambda, &file, "lambda", 1e-4)?;
        let epochs = resolve(&common.epochs, &file, "epochs", 50)?;
        let seed = resolve(&common.seed, &file, "seed", 0)?;
        let threads = resolve(&common.threads, &file, "threads", 1)?;
        let repeat = resolve(&common.repeat, &file, "repeat", 1)?;
        let format_s = resolve(
            &common.format,
            &file,
            "format",
            "canonical-binary".to_string(),
        )?;
        let train_fraction = resolve(&common.train_fraction, &file, "train-fraction", 0.7)?;

        if k == 0 {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        if tau <= 0.0 || dt <= 0.0 {
            return Err(CliError::Usage("tau and dt must be positive".into()));
        }
        if windows == 0 {
            return Err(CliError::Usage("windows must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(CliError::Usage("train-fraction must be in [0, 1]".into()));
        }
        let mode: Mode = mode_s
            .parse()
            .map_err(|e: String| CliError::Usage(e))?;
        let format: Format = format_s.parse().map_err(CliError::Usage)?;
        let mut hats = HatsParams::new(k, SurfaceParams::new(rho, tau, dt as u64), mode);
        match block_s.as_str() {
            "off" => {}
            other => match other.strip_prefix("l2:").and_then(|c| c.parse::<u16>().ok()) {
                Some(cells) if cells >= 1 => hats = hats.with_block_norm(cells),
                _ => {
                    return Err(CliError::Usage(format!(
                        "block-norm must be 'off' or 'l2:<cells>', got '{block_s}'"
                    )))
                }
            },
        }
        let hyper = SvmHyper {
            lambda,
            epochs,
            seed,
        };
        let mut echo = BTreeMap::new();
        echo.insert("k".into(), k.to_string());
        echo.insert("rho".into(), rho.to_string());
        echo.insert("tau".into(), tau.to_string());
        echo.insert("dt".into(), dt.to_string());
        echo.insert("windows".into(), windows.to_string());
        echo.insert("mode".into(), mode_s);
        echo.insert("block-norm".into(), block_s);
        echo.insert("lambda".into(), lambda.to_string());
        echo.insert("epochs".into(), epochs.to_string());
        echo.insert("seed".into(), seed.to_string());
        echo.insert("threads".into(), threads.to_string());
        echo.insert("repeat".into(), repeat.to_string());
        echo.insert("format".into(), format_s);
        echo.insert("train-fraction".into(), train_fraction.to_string());
        Ok(RunConfig {
            hats,
            windows,
            hyper,
            seed,
            threads,
            repeat,
            format,
            train_fraction,
            echo,
        })
    }
}

#[derive(Serialize)]
struct BenchSummary {
    runs: Vec<BenchRun>,
    kev_per_s_min: f64,
    kev_per_s_mean: f64,
    kev_per_s_max: f64,
    per_sample_ms_mean: f64,
}

/// Structured metrics record; deterministic fields reproduce bit-exactly
/// from the echoed config, timings and the timestamp excluded.
#[derive(Serialize)]
struct MetricsReport {
    command: String,
    config: BTreeMap<String, String>,
    unix_time_s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roc_points: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bench: Option<BenchSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepRow>>,
}

impl MetricsReport {
    fn new(command: &str, config: &RunConfig) -> Self {
        MetricsReport {
            command: command.to_string(),
            config: config.echo.clone(),
            unix_time_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            accuracy: None,
            auc: None,
            roc_points: None,
            bench: None,
            sweep: None,
        }
    }

    fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        match path {
            Some(p) => std::fs::write(p, json + "\n")?,
            None => println!("{json}"),
        }
        Ok(())
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hats: error: {}", e.message().replace('\n', " "));
            e.code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::SweepLatency(args) => cmd_sweep_latency(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    if args.per_class == 0 {
        return Err(CliError::Usage("per-class must be at least 1".into()));
    }
    if args.noise_rate < 0.0 {
        return Err(CliError::Usage("noise-rate must be non-negative".into()));
    }
    let geometry = SensorGeometry::new(args.width.max(1), args.height.max(1));
    let noise = NoiseSpec::new(args.noise_rate, config.seed ^ 0x6e6f697365);
    let streams = two_class_dataset(args.per_class, geometry, &noise, config.seed);
    write_dataset_dir(&args.out, &streams)?;
    println!(
        "wrote {} samples ({} events) to {}",
        streams.len(),
        streams.iter().map(|s| s.len()).sum::<usize>(),
        args.out.display()
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let input_format = match &args.input_format {
        Some(s) => s.parse().map_err(CliError::Usage)?,
        None => Format::from_path(&args.input).ok_or_else(|| {
            CliError::Usage(format!(
                "cannot infer format of {}; pass --input-format",
                args.input.display()
            ))
        })?,
    };
    let stream = read_events(&args.input, input_format)?;
    // An explicit --format wins; otherwise the output extension decides,
    // falling back to the configured format for unknown extensions.
    let output_format = match &args.common.format {
        Some(s) => s.parse().map_err(CliError::Usage)?,
        None => Format::from_path(&args.output).unwrap_or(config.format),
    };
    write_events(&stream, &args.output, output_format)?;
    println!("converted {} events", stream.len());
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let streams = load_dataset_dir(&args.input)?;
    let matrix = extract_features(&streams, &config.hats, config.windows, config.threads)?;
    write_features(&matrix, &args.out)?;
    if streams.iter().all(|s| s.label().is_some()) {
        let labels = collect_labels(&streams)?;
        write_labels(&labels, &labels_path(&args.out))?;
    }
    println!(
        "extracted {} samples x {} features ({})",
        matrix.num_rows(),
        matrix.dim(),
        config.hats.fingerprint()
    );
    Ok(())
}

fn labels_path(features: &Path) -> PathBuf {
    let mut os = features.as_os_str().to_os_string();
    os.push(".labels");
    PathBuf::from(os)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let features = read_features(&args.features)?;
    let labels_file = args
        .labels
        .clone()
        .unwrap_or_else(|| labels_path(&args.features));
    let labels = read_labels(&labels_file)?;
    if labels.len() != features.num_rows() {
        return Err(CliError::Data(format!(
            "{} labels for {} samples",
            labels.len(),
            features.num_rows()
        )));
    }
    let (model, train_size) = if config.train_fraction < 1.0 && config.train_fraction > 0.0 {
        let (train_idx, _) = stratified_split(&labels, config.train_fraction, config.seed);
        let model = train_linear_svm(
            &select_rows(&features, &train_idx),
            &select_labels(&labels, &train_idx),
            &config.hyper,
        )?;
        (model, train_idx.len())
    } else {
        (
            train_linear_svm(&features, &labels, &config.hyper)?,
            labels.len(),
        )
    };
    let mut model = model;
    model.set_fingerprint(&config.hats.fingerprint());
    write_model(&model, &args.model_out)?;
    println!(
        "trained on {train_size} samples, {} classes -> {}",
        model.classes().len(),
        args.model_out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let features = read_features(&args.features)?;
    let labels_file = args
        .labels
        .clone()
        .unwrap_or_else(|| labels_path(&args.features));
    let labels = read_labels(&labels_file)?;
    if labels.len() != features.num_rows() {
        return Err(CliError::Data(format!(
            "{} labels for {} samples",
            labels.len(),
            features.num_rows()
        )));
    }
    let model = read_model(&args.model)?;
    // Evaluate the held-out complement of the training split; a fraction
    // of 0 evaluates everything.
    let result = if config.train_fraction > 0.0 && config.train_fraction < 1.0 {
        let (_, test_idx) = stratified_split(&labels, config.train_fraction, config.seed);
        evaluate(
            &model,
            &select_rows(&features, &test_idx),
            &select_labels(&labels, &test_idx),
        )?
    } else {
        evaluate(&model, &features, &labels)?
    };
    let mut report = MetricsReport::new("eval", &config);
    report.accuracy = Some(result.accuracy);
    if let Some(roc) = &result.roc {
        report.auc = Some(roc.auc);
        report.roc_points = Some(roc.points.clone());
    }
    report.emit(args.metrics_out.as_deref())?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let streams = load_dataset_dir(&args.input)?;
    let runs = bench_extraction(
        &streams,
        &config.hats,
        config.windows,
        config.threads,
        config.repeat,
    )?;
    let kev: Vec<f64> = runs.iter().map(|r| r.kev_per_s).collect();
    let summary = BenchSummary {
        kev_per_s_min: kev.iter().cloned().fold(f64::INFINITY, f64::min),
        kev_per_s_max: kev.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        kev_per_s_mean: kev.iter().sum::<f64>() / kev.len() as f64,
        per_sample_ms_mean: runs.iter().map(|r| r.per_sample_ms).sum::<f64>() / runs.len() as f64,
        runs,
    };
    let mut report = MetricsReport::new("bench", &config);
    report.bench = Some(summary);
    report.emit(args.metrics_out.as_deref())?;
    Ok(())
}

fn cmd_sweep_latency(args: SweepArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args.common)?;
    let durations: Vec<u64> = args
        .durations
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad --durations '{}'", args.durations)))?;
    let streams = load_dataset_dir(&args.input)?;
    let rows = sweep_latency(
        &streams,
        &config.hats,
        config.windows,
        &config.hyper,
        &durations,
        args.repetitions,
        config.seed,
        config.train_fraction,
        config.threads,
    )?;
    let mut csv = String::from("duration_us,accuracy,auc\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{}\n", row.duration_us, row.accuracy, row.auc));
    }
    std::fs::write(&args.out, csv)?;
    let mut report = MetricsReport::new("sweep-latency", &config);
    report.sweep = Some(rows);
    report.emit(args.metrics_out.as_deref())?;
    Ok(())
}
