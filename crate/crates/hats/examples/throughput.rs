//! Benchmarks feature extraction throughput on a synthetic corpus of
//! at least one million events, single-threaded and with all cores.
//!
//! Run with: cargo run --release --example throughput

use hats::pipeline::bench_extraction;
use hats::synth::{two_class_dataset, NoiseSpec};
use hats::{HatsParams, Mode, SensorGeometry, SurfaceParams};

fn main() {
    let geometry = SensorGeometry::new(64, 64);
    let streams = two_class_dataset(100, geometry, &NoiseSpec::new(20_000.0, 9), 17);
    let total: u64 = streams.iter().map(|s| s.len() as u64).sum();
    println!("corpus: {} samples, {} events", streams.len(), total);

    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    for threads in [1usize, 0] {
        let runs = bench_extraction(&streams, &params, 1, threads, 3).expect("bench");
        let best = runs
            .iter()
            .map(|r| r.kev_per_s)
            .fold(f64::MIN, f64::max);
        let label = if threads == 1 { "1 thread" } else { "all cores" };
        println!(
            "{label}: best {best:.1} Kev/s, {:.2} ms/sample",
            runs.iter().map(|r| r.per_sample_ms).fold(f64::MAX, f64::min)
        );
    }
}
