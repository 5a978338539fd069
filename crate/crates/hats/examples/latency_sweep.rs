//! Measures classification accuracy as a function of observation
//! latency: each sample is truncated to its first d microseconds and
//! the whole extract -> train -> eval pipeline is rerun per duration.
//!
//! Run with: cargo run --release --example latency_sweep

use hats::classifier::SvmHyper;
use hats::pipeline::sweep_latency;
use hats::synth::{two_class_dataset, NoiseSpec};
use hats::{HatsParams, Mode, SensorGeometry, SurfaceParams};

fn main() {
    let geometry = SensorGeometry::new(32, 32);
    let streams = two_class_dataset(60, geometry, &NoiseSpec::new(2_000.0, 3), 11);
    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    let durations = [2_000u64, 10_000, 25_000, 50_000, 100_000];

    let rows = sweep_latency(
        &streams,
        &params,
        1,
        &SvmHyper::default(),
        &durations,
        5,
        42,
        0.7,
        0,
    )
    .expect("sweep");

    println!("duration_us,accuracy,auc");
    for row in &rows {
        println!("{},{:.4},{:.4}", row.duration_us, row.accuracy, row.auc);
    }
}
