//! Deterministic synthetic event streams: moving-edge scenes and Poisson
//! noise injection. These provide oracle-scale end-to-end tests, the noise
//! robustness experiment and the latency sweep without external datasets.

use crate::event::{Event, EventStream, Polarity, SensorGeometry};
use crate::rng::Rng;

/// Edge orientation of a moving-edge scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgePattern {
    /// Edge parallel to the y axis, sweeping across columns.
    Vertical,
    /// Edge parallel to the x axis, sweeping across rows.
    Horizontal,
    /// Edge along the anti-diagonal, sweeping along x + y.
    Diagonal,
}

/// A moving contrast edge crossing the sensor. The leading boundary emits
/// ON events when it crosses a pixel center, the trailing boundary
/// (`edge_separation_px` behind) emits OFF events.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub geometry: SensorGeometry,
    pub pattern: EdgePattern,
    /// Pixels per second along the sweep axis; the sign sets the
    /// direction. Must be nonzero.
    pub velocity_px_per_s: f64,
    /// Scene length in microseconds; events at `t >= duration` are dropped.
    pub duration_us: u64,
    /// Events emitted per pixel crossing; all share the crossing timestamp.
    pub events_per_crossing: u32,
    /// Leading-edge position along the sweep axis at t = 0, in pixels.
    pub phase_px: f64,
    /// Distance of the trailing OFF boundary behind the leading edge.
    pub edge_separation_px: f64,
    pub seed: u64,
}

impl SceneSpec {
    /// Scene with phase 0 and the trailing boundary a full sweep extent
    /// behind the leading edge.
    pub fn new(
        geometry: SensorGeometry,
        pattern: EdgePattern,
        velocity_px_per_s: f64,
        duration_us: u64,
    ) -> Self {
        assert!(duration_us > 0, "duration must be positive");
        assert!(velocity_px_per_s != 0.0, "velocity must be nonzero");
        let extent = match pattern {
            EdgePattern::Vertical => geometry.width as f64,
            EdgePattern::Horizontal => geometry.height as f64,
            EdgePattern::Diagonal => (geometry.width + geometry.height - 1) as f64,
        };
        SceneSpec {
            geometry,
            pattern,
            velocity_px_per_s,
            duration_us,
            events_per_crossing: 1,
            phase_px: 0.0,
            edge_separation_px: extent,
            seed: 0,
        }
    }
}

/// Uniform background activity over the whole array.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    /// Poisson rate in events per second over the whole array.
    pub rate_hz: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(rate_hz: f64, seed: u64) -> Self {
        assert!(rate_hz >= 0.0, "noise rate must be non-negative");
        NoiseSpec { rate_hz, seed }
    }
}

/// Sweep-axis coordinate of a pixel for a pattern.
fn sweep_coord(pattern: EdgePattern, x: u16, y: u16) -> f64 {
    match pattern {
        EdgePattern::Vertical => x as f64,
        EdgePattern::Horizontal => y as f64,
        EdgePattern::Diagonal => (x as u32 + y as u32) as f64,
    }
}

/// Emits events where the moving edge crosses pixel centers, merged into
/// global time order. Deterministic given the spec.
pub fn generate_scene(spec: &SceneSpec) -> EventStream {
    let v = spec.velocity_px_per_s;
    // Crossing time in microseconds for a boundary currently `offset`
    // pixels behind the leading edge.
    let crossing_us = |coord: f64, offset: f64| -> Option<u64> {
        let t = (coord - spec.phase_px + offset.copysign(v)) / v * 1e6;
        if t >= 0.0 && t < spec.duration_us as f64 {
            Some(t.round() as u64)
        } else {
            None
        }
    };
    let mut events: Vec<Event> = Vec::new();
    let mut emit = |x: u16, y: u16, offset: f64, p: Polarity| {
        if let Some(t) = crossing_us(sweep_coord(spec.pattern, x, y), offset) {
            for _ in 0..spec.events_per_crossing {
                events.push(Event::new(x, y, t, p));
            }
        }
    };
    for y in 0..spec.geometry.height {
        for x in 0..spec.geometry.width {
            emit(x, y, 0.0, Polarity::On);
            emit(x, y, spec.edge_separation_px, Polarity::Off);
        }
    }
    // Stable sort keeps the raster generation order as the tiebreak for
    // simultaneous crossings, so output is deterministic.
    events.sort_by_key(|e| e.t);
    EventStream::validate(events, spec.geometry).expect("generated events are in bounds")
}

/// Merges a Poisson background process over the stream's time span into
/// the stream. Original events are unchanged and global time order is
/// preserved; on timestamp ties original events come first. Deterministic
/// given the noise seed.
pub fn inject_noise(stream: &EventStream, noise: &NoiseSpec) -> EventStream {
    if noise.rate_hz == 0.0 || stream.is_empty() {
        return stream.clone();
    }
    let t_first = stream.first_time().unwrap();
    let t_last = stream.last_time().unwrap();
    let span_us = t_last - t_first;
    let mut rng = Rng::new(noise.seed);
    let mean = noise.rate_hz * span_us as f64 / 1e6;
    let count = rng.poisson(mean);
    let g = stream.geometry();
    let mut noise_events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let t = t_first + rng.next_below(span_us + 1);
        let x = rng.next_below(g.width as u64) as u16;
        let y = rng.next_below(g.height as u64) as u16;
        let p = if rng.next_bool() { Polarity::On } else { Polarity::Off };
        noise_events.push(Event::new(x, y, t, p));
    }
    noise_events.sort_by_key(|e| e.t);
    // Merge two sorted runs, original first on ties.
    let mut merged = Vec::with_capacity(stream.len() + noise_events.len());
    let mut orig = stream.events().iter().peekable();
    let mut noisy = noise_events.iter().peekable();
    loop {
        match (orig.peek(), noisy.peek()) {
            (Some(o), Some(n)) => {
                if o.t <= n.t {
                    merged.push(**o);
                    orig.next();
                } else {
                    merged.push(**n);
                    noisy.next();
                }
            }
            (Some(_), None) => {
                merged.extend(orig.copied());
                break;
            }
            (None, Some(_)) => {
                merged.extend(noisy.copied());
                break;
            }
            (None, None) => break,
        }
    }
    let mut out = EventStream::validate(merged, g).expect("merge preserves ordering");
    if let Some(label) = stream.label() {
        out = out.with_label(label);
    }
    out
}

/// Desk-scale two-class task: class 0 is horizontal-edge scenes, class 1
/// vertical-edge scenes, with randomized velocities and phases and
/// Poisson noise at `noise.rate_hz`. Deterministic given `seed`.
pub fn two_class_dataset(
    n_per_class: usize,
    geometry: SensorGeometry,
    noise: &NoiseSpec,
    seed: u64,
) -> Vec<EventStream> {
    assert!(n_per_class >= 1);
    let duration_us = 100_000u64;
    let mut out = Vec::with_capacity(2 * n_per_class);
    for class in 0..2u32 {
        let pattern = if class == 0 {
            EdgePattern::Horizontal
        } else {
            EdgePattern::Vertical
        };
        let extent = match pattern {
            EdgePattern::Horizontal => geometry.height as f64,
            _ => geometry.width as f64,
        };
        for i in 0..n_per_class {
            let sample_seed = Rng::derive(seed, (class as u64) << 32 | i as u64);
            let mut rng = Rng::new(sample_seed);
            // Sweep between 30% and 100% of the extent within the scene.
            let speed = extent * rng.range_f64(0.3, 1.0) / (duration_us as f64 / 1e6);
            let velocity = if rng.next_bool() { speed } else { -speed };
            let phase = rng.range_f64(0.0, extent);
            let mut spec = SceneSpec::new(geometry, pattern, velocity, duration_us);
            spec.phase_px = phase;
            spec.seed = sample_seed;
            let clean = generate_scene(&spec);
            let sample_noise = NoiseSpec::new(noise.rate_hz, Rng::derive(noise.seed, sample_seed));
            out.push(inject_noise(&clean, &sample_noise).with_label(class));
        }
    }
    out
}
