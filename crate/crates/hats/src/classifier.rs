//! Linear SVM training and evaluation.
//!
//! The solver is seeded stochastic subgradient descent on L2-regularized
//! hinge loss with learning rate `1/(lambda * step)` and final-iterate
//! averaging over the last epoch. Multiclass problems train one-vs-rest;
//! binary problems store a single weight vector scoring the positive
//! class. Given identical inputs and seed the result is bit-identical.

use crate::io::FeatureMatrix;
use crate::rng::Rng;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data contains fewer than two classes")]
    SingleClassInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyper {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-4,
            epochs: 50,
            seed: 0,
        }
    }
}

/// A trained linear model: one weight vector and bias per class (a single
/// one for binary problems), the class list, and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<u32>,
    dim: usize,
    /// One per class for multiclass; exactly one for binary, scoring
    /// `classes[1]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    hyper: SvmHyper,
    /// Feature-extraction parameter fingerprint carried through from the
    /// descriptor stage; empty if unknown.
    fingerprint: String,
}

impl LinearModel {
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hyper(&self) -> &SvmHyper {
        &self.hyper
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn set_fingerprint(&mut self, fp: &str) {
        self.fingerprint = fp.to_string();
    }
}

/// Objective value: mean hinge loss plus `lambda * ||w||^2`, summed over
/// the per-class subproblems.
pub fn svm_objective(
    features: &FeatureMatrix,
    labels: &[u32],
    model: &LinearModel,
) -> f64 {
    let n = features.num_rows() as f64;
    let mut total = 0.0;
    for (k, (w, &b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let positive = if model.weights.len() == 1 {
            model.classes[1]
        } else {
            model.classes[k]
        };
        let mut hinge = 0.0;
        for (row, &label) in features.rows().zip(labels) {
            let y = if label == positive { 1.0 } else { -1.0 };
            let margin = y * (dot(w, row) + b);
            hinge += (1.0 - margin).max(0.0);
        }
        total += hinge / n + model.hyper.lambda * dot(w, w);
    }
    total
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains one binary subproblem; returns the averaged last-epoch iterate
/// and, when requested, the objective trace at each epoch's averaged
/// iterate.
fn train_binary(
    features: &FeatureMatrix,
    targets: &[f64],
    hyper: &SvmHyper,
) -> (Vec<f64>, f64) {
    let dim = features.dim();
    let n = features.num_rows();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = Rng::new(hyper.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    for epoch in 0..hyper.epochs {
        rng.shuffle(&mut order);
        let last_epoch = epoch + 1 == hyper.epochs;
        for &i in &order {
            step += 1;
            let eta = 1.0 / (hyper.lambda * step as f64);
            let x = features.row(i);
            let y = targets[i];
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * hyper.lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (v, &xi) in w.iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                // The bias is unregularized; the 1/(lambda*step) rate would
                // make its early steps enormous, so it anneals as 1/step.
                b += y / step as f64;
            }
            if last_epoch {
                for (a, &v) in avg_w.iter_mut().zip(&w) {
                    *a += v;
                }
                avg_b += b;
            }
        }
    }
    let steps_last = n as f64;
    for a in avg_w.iter_mut() {
        *a /= steps_last;
    }
    (avg_w, avg_b / steps_last)
}

/// Per-epoch averaged iterates for one binary subproblem; exposed for
/// objective-trace inspection in tests.
pub fn train_binary_trace(
    features: &FeatureMatrix,
    targets: &[f64],
    hyper: &SvmHyper,
) -> Vec<(Vec<f64>, f64)> {
    let dim = features.dim();
    let n = features.num_rows();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = Rng::new(hyper.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    let mut trace = Vec::with_capacity(hyper.epochs as usize);
    for _ in 0..hyper.epochs {
        rng.shuffle(&mut order);
        let mut avg_w = vec![0.0; dim];
        let mut avg_b = 0.0;
        for &i in &order {
            step += 1;
            let eta = 1.0 / (hyper.lambda * step as f64);
            let x = features.row(i);
            let y = targets[i];
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * hyper.lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (v, &xi) in w.iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                b += y / step as f64;
            }
            for (a, &v) in avg_w.iter_mut().zip(&w) {
                *a += v;
            }
            avg_b += b;
        }
        for a in avg_w.iter_mut() {
            *a /= n as f64;
        }
        trace.push((avg_w, avg_b / n as f64));
    }
    trace
}

pub fn train_linear_svm(
    features: &FeatureMatrix,
    labels: &[u32],
    hyper: &SvmHyper,
) -> Result<LinearModel, ClassifierError> {
    if features.num_rows() == 0 || labels.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    if features.num_rows() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            left: features.num_rows(),
            right: labels.len(),
        });
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ClassifierError::SingleClassInput);
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    if classes.len() == 2 {
        let positive = classes[1];
        let targets: Vec<f64> = labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect();
        let (w, b) = train_binary(features, &targets, hyper);
        weights.push(w);
        biases.push(b);
    } else {
        for &class in &classes {
            let targets: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let sub = SvmHyper {
                seed: Rng::derive(hyper.seed, class as u64),
                ..*hyper
            };
            let (w, b) = train_binary(features, &targets, &sub);
            weights.push(w);
            biases.push(b);
        }
    }
    Ok(LinearModel {
        classes,
        dim: features.dim(),
        weights,
        biases,
        hyper: *hyper,
        fingerprint: String::new(),
    })
}

/// Per-sample, per-class scores `w_k . x + b_k`. For binary models the
/// negative class is scored as the negation of the positive-class score,
/// so argmax with the low-index tiebreak reproduces the sign rule.
pub fn decision_scores(
    model: &LinearModel,
    features: &FeatureMatrix,
) -> Result<Vec<Vec<f64>>, ClassifierError> {
    if features.dim() != model.dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim,
            got: features.dim(),
        });
    }
    let mut out = Vec::with_capacity(features.num_rows());
    for row in features.rows() {
        if model.weights.len() == 1 {
            let s = dot(&model.weights[0], row) + model.biases[0];
            out.push(vec![-s, s]);
        } else {
            out.push(
                model
                    .weights
                    .iter()
                    .zip(&model.biases)
                    .map(|(w, &b)| dot(w, row) + b)
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Argmax class per sample; ties break toward the lower class index.
pub fn predict(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<u32>, ClassifierError> {
    let scores = decision_scores(model, features)?;
    Ok(scores
        .iter()
        .map(|s| {
            let mut best = 0;
            for (k, &v) in s.iter().enumerate().skip(1) {
                if v > s[best] {
                    best = k;
                }
            }
            model.classes[best]
        })
        .collect())
}

/// Score of the positive (higher-index) class for each sample of a binary
/// model, as used for ROC analysis.
pub fn positive_scores(
    model: &LinearModel,
    features: &FeatureMatrix,
) -> Result<Vec<f64>, ClassifierError> {
    let scores = decision_scores(model, features)?;
    Ok(scores.iter().map(|s| s[s.len() - 1]).collect())
}

pub fn accuracy(predicted: &[u32], actual: &[u32]) -> Result<f64, ClassifierError> {
    if predicted.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    if predicted.len() != actual.len() {
        return Err(ClassifierError::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// ROC curve from a descending threshold sweep with tied scores grouped
/// into single steps, plus the trapezoidal AUC. Equivalent to the
/// Mann-Whitney statistic with half credit for tied positive-negative
/// pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` points from `(0,0)`
    /// to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve, ClassifierError> {
    if scores.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    if scores.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ClassifierError::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        // Group equal scores into one threshold step.
        let mut j = i;
        let (mut d_tp, mut d_fp) = (0usize, 0usize);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                d_tp += 1;
            } else {
                d_fp += 1;
            }
            j += 1;
        }
        let (x0, y0) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        tp += d_tp;
        fp += d_fp;
        let (x1, y1) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
        i = j;
    }
    Ok(RocCurve { points, auc })
}

/// Exhaustive O(n^2) Mann-Whitney statistic: fraction of positive-negative
/// pairs ranked correctly, with 0.5 credit for ties. Reference oracle for
/// [`roc_auc`].
pub fn mann_whitney_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut concordant = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    concordant / pairs
}

const MODEL_SCHEMA: &str = "hats-linear-model/1";

/// Writes the model as self-describing text; floats are printed with 17
/// significant digits so parsing recovers them exactly.
pub fn write_model(model: &LinearModel, path: &Path) -> Result<(), ClassifierError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "schema {MODEL_SCHEMA}")?;
    writeln!(
        w,
        "classes {}",
        model
            .classes
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(w, "dim {}", model.dim)?;
    writeln!(w, "lambda {:.16e}", model.hyper.lambda)?;
    writeln!(w, "epochs {}", model.hyper.epochs)?;
    writeln!(w, "seed {}", model.hyper.seed)?;
    writeln!(w, "fingerprint {}", model.fingerprint)?;
    for (k, (weights, bias)) in model.weights.iter().zip(&model.biases).enumerate() {
        writeln!(w, "bias {k} {bias:.16e}")?;
        write!(w, "weights {k}")?;
        for v in weights {
            write!(w, " {v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<LinearModel, ClassifierError> {
    let r = BufReader::new(File::open(path)?);
    let mut classes = Vec::new();
    let mut dim = 0usize;
    let mut hyper = SvmHyper::default();
    let mut fingerprint = String::new();
    let mut weights: Vec<Vec<f64>> = Vec::new();
    let mut biases: Vec<f64> = Vec::new();
    let mut saw_schema = false;
    for line in r.lines() {
        let line = line?;
        let mut it = line.splitn(2, ' ');
        let key = it.next().unwrap_or("");
        let rest = it.next().unwrap_or("");
        match key {
            "schema" => {
                if rest != MODEL_SCHEMA {
                    return Err(ClassifierError::MalformedModel(format!(
                        "unsupported schema '{rest}'"
                    )));
                }
                saw_schema = true;
            }
            "classes" => {
                classes = rest
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ClassifierError::MalformedModel("bad class list".into()))?;
            }
            "dim" => {
                dim = rest
                    .trim()
                    .parse()
                    .map_err(|_| ClassifierError::MalformedModel("bad dim".into()))?;
            }
            "lambda" => {
                hyper.lambda = rest
                    .trim()
                    .parse()
                    .map_err(|_| ClassifierError::MalformedModel("bad lambda".into()))?;
            }
            "epochs" => {
                hyper.epochs = rest
                    .trim()
                    .parse()
                    .map_err(|_| ClassifierError::MalformedModel("bad epochs".into()))?;
            }
            "seed" => {
                hyper.seed = rest
                    .trim()
                    .parse()
                    .map_err(|_| ClassifierError::MalformedModel("bad seed".into()))?;
            }
            "fingerprint" => fingerprint = rest.to_string(),
            "bias" => {
                let mut f = rest.split_whitespace();
                let idx: usize = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| ClassifierError::MalformedModel("bad bias index".into()))?;
                let value: f64 = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| ClassifierError::MalformedModel("bad bias value".into()))?;
                if biases.len() != idx {
                    return Err(ClassifierError::MalformedModel("bias out of order".into()));
                }
                biases.push(value);
            }
            "weights" => {
                let mut f = rest.split_whitespace();
                let idx: usize = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| ClassifierError::MalformedModel("bad weight index".into()))?;
                let values: Vec<f64> = f
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ClassifierError::MalformedModel("bad weight value".into()))?;
                if weights.len() != idx {
                    return Err(ClassifierError::MalformedModel("weights out of order".into()));
                }
                weights.push(values);
            }
            "" => {}
            other => {
                return Err(ClassifierError::MalformedModel(format!(
                    "unknown key '{other}'"
                )));
            }
        }
    }
    if !saw_schema {
        return Err(ClassifierError::MalformedModel("missing schema line".into()));
    }
    for w in &weights {
        if w.len() != dim {
            return Err(ClassifierError::MalformedModel(
                "weight vector length != dim".into(),
            ));
        }
    }
    if weights.len() != biases.len() || weights.is_empty() {
        return Err(ClassifierError::MalformedModel("missing weights".into()));
    }
    Ok(LinearModel {
        classes,
        dim,
        weights,
        biases,
        hyper,
        fingerprint,
    })
}
