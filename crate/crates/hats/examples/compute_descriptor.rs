//! Computes a HATS descriptor for a synthetic moving-edge scene and
//! compares the two memory-update modes. In faithful mode each event is
//! stored only in its own cell's memory unit; in exact mode it is stored
//! in every unit whose neighborhood can see it, so surfaces near cell
//! borders lose no context.
//!
//! Run with: cargo run --example compute_descriptor

use hats::synth::{generate_scene, EdgePattern, SceneSpec};
use hats::{compute_hats, HatsParams, Mode, SensorGeometry, SurfaceParams};

fn main() {
    let geometry = SensorGeometry::new(64, 64);
    let mut spec = SceneSpec::new(geometry, EdgePattern::Vertical, 500.0, 100_000);
    spec.events_per_crossing = 2;
    let stream = generate_scene(&spec);
    println!("scene: {} events over {} us", stream.len(), 100_000);

    let surface = SurfaceParams::new(3, 1e9, 100_000);
    for mode in [Mode::Faithful, Mode::Exact] {
        let params = HatsParams::new(10, surface, mode);
        let desc = compute_hats(&stream, &params);
        let nonzero = desc.values().iter().filter(|v| **v != 0.0).count();
        let sum: f64 = desc.values().iter().sum();
        println!(
            "{:?}: dim {} ({} cells x {} surface entries), {} nonzero, mass {:.3}, fingerprint {}",
            mode,
            desc.len(),
            desc.len() / surface.surface_len(),
            surface.surface_len(),
            nonzero,
            sum,
            desc.fingerprint()
        );
    }

    // Optional block L2 normalization over groups of cells, useful when
    // feeding the descriptor to a margin-based classifier.
    let params = HatsParams::new(10, surface, Mode::Faithful).with_block_norm(2);
    let desc = compute_hats(&stream, &params);
    let norm: f64 = desc.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("block-normalized: dim {}, total l2 {:.3}", desc.len(), norm);
}
