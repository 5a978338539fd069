//! Dataset-directory conventions and the extract / train / eval / bench /
//! sweep stages that the CLI and the examples share.
//!
//! A dataset directory holds one event file per sample (`.evt` canonical
//! binary, `.csv`, or `.bin` N-MNIST) plus an optional `labels.csv` with
//! `file,label` lines. Samples are processed in filename order.

use crate::classifier::{
    accuracy, predict, positive_scores, roc_auc, train_linear_svm, ClassifierError, LinearModel,
    RocCurve, SvmHyper,
};
use crate::descriptor::{stack_windows, HatsParams};
use crate::event::EventStream;
use crate::io::{read_events, write_events, FeatureMatrix, Format, FormatError};
use crate::rng::Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        source: FormatError,
    },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    InvalidInput(String),
}

/// Loads every recognizable event file under `dir`, in filename order,
/// attaching labels from `labels.csv` when present.
pub fn load_dataset_dir(dir: &Path) -> Result<Vec<EventStream>, PipelineError> {
    let labels = read_label_map(dir)?;
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && Format::from_path(p).is_some()
                && p.file_name().and_then(|n| n.to_str()) != Some("labels.csv")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(PipelineError::EmptyDataset(dir.display().to_string()));
    }
    let mut streams = Vec::with_capacity(paths.len());
    for path in paths {
        let format = Format::from_path(&path).unwrap();
        let mut stream = read_events(&path, format).map_err(|source| PipelineError::File {
            path: path.display().to_string(),
            source,
        })?;
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if let Some(&label) = labels.get(name) {
                stream = stream.with_label(label);
            }
        }
        streams.push(stream);
    }
    Ok(streams)
}

fn read_label_map(dir: &Path) -> Result<HashMap<String, u32>, PipelineError> {
    let path = dir.join("labels.csv");
    let mut map = HashMap::new();
    if !path.exists() {
        return Ok(map);
    }
    for (i, line) in std::fs::read_to_string(&path)?.lines().enumerate() {
        if i == 0 && line.trim() == "file,label" {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (file, label) = line.split_once(',').ok_or_else(|| {
            PipelineError::InvalidInput(format!("labels.csv line {}: missing comma", i + 1))
        })?;
        let label: u32 = label.trim().parse().map_err(|_| {
            PipelineError::InvalidInput(format!("labels.csv line {}: bad label", i + 1))
        })?;
        map.insert(file.trim().to_string(), label);
    }
    Ok(map)
}

/// Writes labeled streams as `sample_NNNNN.evt` plus `labels.csv`.
pub fn write_dataset_dir(dir: &Path, streams: &[EventStream]) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    let mut labels = String::from("file,label\n");
    for (i, stream) in streams.iter().enumerate() {
        let name = format!("sample_{i:05}.evt");
        let path = dir.join(&name);
        write_events(stream, &path, Format::CanonicalBinary).map_err(|source| {
            PipelineError::File {
                path: path.display().to_string(),
                source,
            }
        })?;
        if let Some(label) = stream.label() {
            labels.push_str(&format!("{name},{label}\n"));
        }
    }
    std::fs::write(dir.join("labels.csv"), labels)?;
    Ok(())
}

/// Feature extraction over a sample list. All samples must share one
/// sensor geometry (the descriptor dimension depends on it).
/// `threads = 1` processes samples sequentially on the calling thread;
/// other values use a worker pool of that size (0 = one per core).
pub fn extract_features(
    streams: &[EventStream],
    params: &HatsParams,
    windows: u32,
    threads: usize,
) -> Result<FeatureMatrix, PipelineError> {
    if streams.is_empty() {
        return Err(PipelineError::EmptyDataset("no samples".into()));
    }
    let geometry = streams[0].geometry();
    for s in streams {
        if s.geometry() != geometry {
            return Err(PipelineError::InvalidInput(
                "samples have mixed sensor geometries".into(),
            ));
        }
    }
    let rows: Vec<Vec<f64>> = if threads == 1 {
        streams
            .iter()
            .map(|s| stack_windows(s, params, windows))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
        pool.install(|| {
            streams
                .par_iter()
                .map(|s| stack_windows(s, params, windows))
                .collect()
        })
    };
    Ok(FeatureMatrix::from_rows(rows))
}

pub fn collect_labels(streams: &[EventStream]) -> Result<Vec<u32>, PipelineError> {
    streams
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label()
                .ok_or_else(|| PipelineError::InvalidInput(format!("sample {i} has no label")))
        })
        .collect()
}

/// Seeded stratified split; returns (train indices, test indices).
pub fn stratified_split(
    labels: &[u32],
    train_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut classes: Vec<u32> = by_class.keys().copied().collect();
    classes.sort_unstable();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in classes {
        let mut idx = by_class.remove(&class).unwrap();
        let mut rng = Rng::new(Rng::derive(seed, class as u64));
        rng.shuffle(&mut idx);
        let n_train = ((idx.len() as f64) * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn select_rows(features: &FeatureMatrix, indices: &[usize]) -> FeatureMatrix {
    let mut out = FeatureMatrix::new(features.dim());
    for &i in indices {
        out.push_row(features.row(i));
    }
    out
}

pub fn select_labels(labels: &[u32], indices: &[usize]) -> Vec<u32> {
    indices.iter().map(|&i| labels[i]).collect()
}

/// Accuracy plus, for binary problems, the ROC curve and AUC.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub accuracy: f64,
    pub roc: Option<RocCurve>,
}

pub fn evaluate(
    model: &LinearModel,
    features: &FeatureMatrix,
    labels: &[u32],
) -> Result<EvalResult, PipelineError> {
    let predicted = predict(model, features)?;
    let acc = accuracy(&predicted, labels)?;
    let roc = if model.classes().len() == 2 {
        let scores = positive_scores(model, features)?;
        let positive = model.classes()[1];
        let binary: Vec<bool> = labels.iter().map(|&l| l == positive).collect();
        match roc_auc(&scores, &binary) {
            Ok(curve) => Some(curve),
            Err(ClassifierError::SingleClassInput) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(EvalResult { accuracy: acc, roc })
}

/// One timed feature-extraction pass. Timing covers feature computation
/// only; parsing and I/O happen before the clock starts.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchRun {
    pub total_events: u64,
    pub feature_seconds: f64,
    pub per_sample_ms: f64,
    /// Thousands of events processed per second:
    /// `total_events / feature_seconds / 1000`.
    pub kev_per_s: f64,
}

pub fn bench_extraction(
    streams: &[EventStream],
    params: &HatsParams,
    windows: u32,
    threads: usize,
    repeat: u32,
) -> Result<Vec<BenchRun>, PipelineError> {
    if streams.is_empty() {
        return Err(PipelineError::EmptyDataset("no samples".into()));
    }
    let total_events: u64 = streams.iter().map(|s| s.len() as u64).sum();
    let mut runs = Vec::with_capacity(repeat as usize);
    for _ in 0..repeat.max(1) {
        let start = Instant::now();
        let matrix = extract_features(streams, params, windows, threads)?;
        let feature_seconds = start.elapsed().as_secs_f64();
        // Keep the work observable so the pass cannot be optimized away.
        std::hint::black_box(matrix.num_rows());
        runs.push(BenchRun {
            total_events,
            feature_seconds,
            per_sample_ms: feature_seconds * 1e3 / streams.len() as f64,
            kev_per_s: total_events as f64 / feature_seconds / 1e3,
        });
    }
    Ok(runs)
}

/// One row of the latency-accuracy sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub duration_us: u64,
    pub accuracy: f64,
    pub auc: f64,
}

/// For each duration, truncates every sample to its first `d`
/// microseconds, re-runs extract -> train -> eval on a fixed stratified
/// split, and averages accuracy and AUC over `repetitions` seeds.
pub fn sweep_latency(
    streams: &[EventStream],
    params: &HatsParams,
    windows: u32,
    hyper: &SvmHyper,
    durations_us: &[u64],
    repetitions: u32,
    seed: u64,
    train_fraction: f64,
    threads: usize,
) -> Result<Vec<SweepRow>, PipelineError> {
    if durations_us.is_empty() || durations_us.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PipelineError::InvalidInput(
            "durations must be positive and strictly ascending".into(),
        ));
    }
    let labels = collect_labels(streams)?;
    let mut rows = Vec::with_capacity(durations_us.len());
    for &duration in durations_us {
        let truncated: Vec<EventStream> = streams
            .iter()
            .map(|s| {
                let t0 = s.first_time().unwrap_or(0);
                s.slice_window(t0, t0.saturating_add(duration))
            })
            .collect();
        let features = extract_features(&truncated, params, windows, threads)?;
        let mut acc_sum = 0.0;
        let mut auc_sum = 0.0;
        for rep in 0..repetitions.max(1) {
            let rep_seed = Rng::derive(seed, rep as u64);
            let (train_idx, test_idx) = stratified_split(&labels, train_fraction, rep_seed);
            let model = train_linear_svm(
                &select_rows(&features, &train_idx),
                &select_labels(&labels, &train_idx),
                &SvmHyper {
                    seed: rep_seed,
                    ..*hyper
                },
            )?;
            let result = evaluate(
                &model,
                &select_rows(&features, &test_idx),
                &select_labels(&labels, &test_idx),
            )?;
            acc_sum += result.accuracy;
            auc_sum += result.roc.as_ref().map(|r| r.auc).unwrap_or(f64::NAN);
        }
        let reps = repetitions.max(1) as f64;
        rows.push(SweepRow {
            duration_us: duration,
            accuracy: acc_sum / reps,
            auc: auc_sum / reps,
        });
    }
    Ok(rows)
}
