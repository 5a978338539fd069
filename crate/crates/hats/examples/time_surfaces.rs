//! Builds a tiny event stream and prints both kinds of time surface for
//! its final event: the classic last-event surface, which keeps only the
//! most recent timestamp per pixel, and the local memory time surface,
//! which sums the exponential decay over every event kept in the shared
//! memory within the time window.
//!
//! Run with: cargo run --example time_surfaces

use hats::surface::{
    last_event_surface, local_memory_surface, PixelLastTime, SurfaceParams, TimestampGrid,
};
use hats::{Event, EventStream, Polarity, SensorGeometry};

fn print_surface(title: &str, s: &hats::surface::Surface, rho: i32) {
    println!("{title}");
    for p in [Polarity::Off, Polarity::On] {
        println!("  {:?} channel:", p);
        for z_y in -rho..=rho {
            let row: Vec<String> = (-rho..=rho)
                .map(|z_x| format!("{:6.3}", s.get(z_x, z_y, p)))
                .collect();
            println!("    {}", row.join(" "));
        }
    }
}

fn main() {
    let geometry = SensorGeometry::new(8, 8);
    // Three ON events at the same pixel, then one more next to it. The
    // surface is centered on the final event.
    let raw = vec![
        Event::new(3, 3, 0, Polarity::On),
        Event::new(3, 3, 500, Polarity::On),
        Event::new(3, 3, 1_000, Polarity::On),
        Event::new(4, 3, 1_500, Polarity::On),
    ];
    let stream = EventStream::validate(raw, geometry).expect("valid stream");
    let params = SurfaceParams::new(1, 1_000.0, 10_000);
    let events = stream.events();
    let last = events.last().unwrap();

    // Last-event surface: replay history into a per-pixel timestamp map.
    let mut state = PixelLastTime::new(geometry);
    for e in &events[..events.len() - 1] {
        state.record(e);
    }
    let s_last = last_event_surface(last, &state, &params);
    print_surface("last-event time surface (one exponential per pixel):", &s_last, 1);

    // Local memory time surface: replay history into a timestamp grid
    // that keeps every event inside the window, then sum the decays.
    let mut memory = TimestampGrid::full_sensor(geometry);
    for e in &events[..events.len() - 1] {
        memory.insert(e, params.delta_t);
    }
    let s_mem = local_memory_surface(last, &memory, &params);
    print_surface("\nlocal memory time surface (sum over the window):", &s_mem, 1);

    // At offset (-1, 0) the memory surface sums three decays where the
    // last-event surface keeps only the newest one.
    println!(
        "\ncenter-left entry: last-event {:.3} vs memory {:.3}",
        s_last.get(-1, 0, Polarity::On),
        s_mem.get(-1, 0, Polarity::On)
    );
}
