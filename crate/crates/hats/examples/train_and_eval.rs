//! End-to-end in-memory pipeline: synthetic two-class dataset ->
//! HATS features -> stratified split -> linear SVM -> held-out
//! accuracy and ROC AUC.
//!
//! Run with: cargo run --release --example train_and_eval

use hats::classifier::{train_linear_svm, SvmHyper};
use hats::pipeline::{
    collect_labels, evaluate, extract_features, select_labels, select_rows, stratified_split,
};
use hats::synth::{two_class_dataset, NoiseSpec};
use hats::{HatsParams, Mode, SensorGeometry, SurfaceParams};

fn main() {
    let geometry = SensorGeometry::new(32, 32);
    let streams = two_class_dataset(60, geometry, &NoiseSpec::new(2_000.0, 3), 11);
    let labels = collect_labels(&streams).expect("all samples labeled");

    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    let features = extract_features(&streams, &params, 1, 1).expect("extract");
    println!("{} samples, {} features each", features.num_rows(), features.dim());

    let (train_idx, test_idx) = stratified_split(&labels, 0.7, 5);
    let model = train_linear_svm(
        &select_rows(&features, &train_idx),
        &select_labels(&labels, &train_idx),
        &SvmHyper::default(),
    )
    .expect("train");

    let result = evaluate(
        &model,
        &select_rows(&features, &test_idx),
        &select_labels(&labels, &test_idx),
    )
    .expect("evaluate");
    println!(
        "held out ({} samples): accuracy {:.3}, auc {:.3}",
        test_idx.len(),
        result.accuracy,
        result.roc.as_ref().map(|r| r.auc).unwrap_or(f64::NAN)
    );
}
