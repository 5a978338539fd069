//! Event-camera feature extraction with histograms of averaged time
//! surfaces (HATS), plus a linear SVM pipeline, deterministic synthetic
//! event generation and a throughput benchmark harness.
//!
//! The core path: a validated [`event::EventStream`] flows through
//! [`descriptor::compute_hats`], which keeps one shared memory unit of
//! recent events per K x K pixel cell and accumulates each event's local
//! memory time surface into its cell's histogram in a single streaming
//! pass. Per-cell histograms are averaged by event count and concatenated
//! into a fixed-dimension descriptor suitable for a linear classifier.
//!
//! See the crate's `examples/` directory for one runnable example per
//! capability, and the `hats` binary for the file-based pipeline
//! (`synth`, `convert`, `extract`, `train`, `eval`, `bench`,
//! `sweep-latency`).

pub mod classifier;
pub mod cli;
pub mod descriptor;
pub mod event;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod surface;
pub mod synth;

pub use descriptor::{compute_hats, hats_oracle, HatsDescriptor, HatsParams, Mode};
pub use event::{Event, EventStream, Polarity, SensorGeometry};
pub use surface::SurfaceParams;
