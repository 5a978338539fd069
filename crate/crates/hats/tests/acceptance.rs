//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line when it holds. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use hats::classifier::{mann_whitney_auc, roc_auc, train_linear_svm, SvmHyper};
use hats::descriptor::CellGrid;
use hats::pipeline::{
    bench_extraction, collect_labels, evaluate, extract_features, select_labels, select_rows,
    stratified_split, sweep_latency,
};
use hats::rng::Rng;
use hats::surface::{
    last_event_surface, local_memory_surface, PixelLastTime, SurfaceParams, TimestampGrid,
};
use hats::synth::{
    generate_scene, inject_noise, two_class_dataset, EdgePattern, NoiseSpec, SceneSpec,
};
use hats::{
    compute_hats, hats_oracle, Event, EventStream, HatsParams, Mode, Polarity, SensorGeometry,
};

/// Uniform random stream: geometry up to `max_side` square, up to
/// `max_events` events with sorted timestamps below `t_span`.
fn random_stream(rng: &mut Rng, max_side: u16, max_events: usize, t_span: u64) -> EventStream {
    let w = 8 + rng.next_below((max_side - 8) as u64 + 1) as u16;
    let h = 8 + rng.next_below((max_side - 8) as u64 + 1) as u16;
    let n = rng.next_below(max_events as u64 + 1) as usize;
    let mut ts: Vec<u64> = (0..n).map(|_| rng.next_below(t_span)).collect();
    ts.sort_unstable();
    let events = ts
        .into_iter()
        .map(|t| {
            let x = rng.next_below(w as u64) as u16;
            let y = rng.next_below(h as u64) as u16;
            let p = if rng.next_bool() { Polarity::On } else { Polarity::Off };
            Event::new(x, y, t, p)
        })
        .collect();
    EventStream::validate(events, SensorGeometry::new(w, h)).unwrap()
}

fn random_params(rng: &mut Rng, mode: Mode) -> HatsParams {
    let rho = 1 + rng.next_below(3) as u16;
    let k = 4 + rng.next_below(13) as u16;
    let tau = 10f64.powf(rng.range_f64(3.0, 9.0));
    let dt = 1_000 + rng.next_below(99_001);
    HatsParams::new(k, SurfaceParams::new(rho, tau, dt), mode)
}

fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length mismatch");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!(
            (x - y).abs() <= tol,
            "{what}: entry {i} differs: {x} vs {y}"
        );
    }
}

fn oracle_corpus_check(mode: Mode) {
    let mut rng = Rng::new(match mode {
        Mode::Exact => 101,
        Mode::Faithful => 202,
    });
    for case in 0..100 {
        let stream = random_stream(&mut rng, 64, 5_000, 200_000);
        let params = random_params(&mut rng, mode);
        let fast = compute_hats(&stream, &params);
        let slow = hats_oracle(&stream, &params);
        assert_close(
            fast.values(),
            slow.values(),
            1e-9,
            &format!("{mode:?} case {case} ({} events)", stream.len()),
        );
    }
}

#[test]
fn criterion_1_oracle_equivalence_exact() {
    oracle_corpus_check(Mode::Exact);
    println!("PASS criterion 1: exact-mode streaming equals brute-force oracle on 100 random streams (1e-9)");
}

#[test]
fn criterion_2_oracle_equivalence_faithful() {
    oracle_corpus_check(Mode::Faithful);
    println!("PASS criterion 2: faithful-mode streaming equals cell-restricted oracle on 100 random streams (1e-9)");
}

/// Events constrained to `x < w - shift` so a +shift translation stays
/// in bounds; optionally constrained to cell interiors.
fn constrained_stream(
    rng: &mut Rng,
    geometry: SensorGeometry,
    n: usize,
    max_x: u16,
    interior: Option<(u16, u16)>, // (cell_size, rho)
) -> EventStream {
    let mut ts: Vec<u64> = (0..n).map(|_| rng.next_below(100_000)).collect();
    ts.sort_unstable();
    let events = ts
        .into_iter()
        .map(|t| {
            let (x, y) = loop {
                let x = rng.next_below(max_x as u64) as u16;
                let y = rng.next_below(geometry.height as u64) as u16;
                match interior {
                    None => break (x, y),
                    Some((k, rho)) => {
                        let ok = |v: u16| {
                            let off = v % k;
                            off >= rho && off + rho < k
                        };
                        if ok(x) && ok(y) {
                            break (x, y);
                        }
                    }
                }
            };
            let p = if rng.next_bool() { Polarity::On } else { Polarity::Off };
            Event::new(x, y, t, p)
        })
        .collect();
    EventStream::validate(events, geometry).unwrap()
}

fn cell_slice(values: &[f64], l: usize, surface_len: usize) -> &[f64] {
    &values[l * surface_len..(l + 1) * surface_len]
}

#[test]
fn criterion_3_invariance_suite() {
    let mut rng = Rng::new(303);

    // Time-translation invariance: exact equality after a pure t shift.
    for _ in 0..50 {
        let stream = random_stream(&mut rng, 48, 800, 100_000);
        let mode = if rng.next_bool() { Mode::Exact } else { Mode::Faithful };
        let params = random_params(&mut rng, mode);
        let shift = 1 + rng.next_below(1_000_000) as i64;
        let moved = stream.transform(0, 0, shift).unwrap();
        assert_eq!(
            compute_hats(&stream, &params).values(),
            compute_hats(&moved, &params).values(),
            "time translation changed the descriptor"
        );
    }

    // Cell-aligned shift equivariance. Faithful mode holds
    // unconditionally; exact mode needs events clear of cell borders by
    // rho so no memory unit spans the shift seam.
    for case in 0..50 {
        let k = 8u16;
        let rho = 2u16;
        let geometry = SensorGeometry::new(48, 32);
        let exact = case % 2 == 0;
        let interior = if exact { Some((k, rho)) } else { None };
        let stream = constrained_stream(&mut rng, geometry, 400, geometry.width - k, interior);
        let params = HatsParams::new(
            k,
            SurfaceParams::new(rho, 10f64.powf(rng.range_f64(3.0, 8.0)), 50_000),
            if exact { Mode::Exact } else { Mode::Faithful },
        );
        let shifted = stream.transform(k as i32, 0, 0).unwrap();
        let a = compute_hats(&stream, &params);
        let b = compute_hats(&shifted, &params);
        let grid = CellGrid::new(geometry, k);
        let s = params.surface.surface_len();
        for r in 0..grid.rows() {
            for c in 0..grid.cols() - 1 {
                let orig = cell_slice(a.values(), r * grid.cols() + c, s);
                let moved = cell_slice(b.values(), r * grid.cols() + c + 1, s);
                assert_eq!(orig, moved, "cell ({r},{c}) not shift-equivariant");
            }
            let first = cell_slice(b.values(), r * grid.cols(), s);
            assert!(first.iter().all(|&v| v == 0.0), "shifted-in column not empty");
        }
    }

    // Polarity channel separation: single-polarity input leaves the
    // other channel identically zero.
    for _ in 0..50 {
        let base = random_stream(&mut rng, 32, 400, 100_000);
        let p = if rng.next_bool() { Polarity::On } else { Polarity::Off };
        let events: Vec<Event> = base.events().iter().map(|e| Event::new(e.x, e.y, e.t, p)).collect();
        let stream = EventStream::validate(events, base.geometry()).unwrap();
        let params = random_params(&mut rng, Mode::Exact);
        let desc = compute_hats(&stream, &params);
        let other = match p {
            Polarity::On => Polarity::Off,
            Polarity::Off => Polarity::On,
        };
        for (i, &v) in desc.values().iter().enumerate() {
            if i % 2 == other.channel() {
                assert_eq!(v, 0.0, "opposite-polarity channel leaked at {i}");
            }
        }
    }

    // Dimension formula, including for empty streams.
    for _ in 0..50 {
        let stream = random_stream(&mut rng, 64, 200, 100_000);
        let params = random_params(&mut rng, Mode::Faithful);
        let g = stream.geometry();
        let cells = g.width.div_ceil(params.cell_size) as usize
            * g.height.div_ceil(params.cell_size) as usize;
        let side = 2 * params.surface.rho as usize + 1;
        let expect = cells * side * side * 2;
        assert_eq!(compute_hats(&stream, &params).len(), expect);
        let empty = EventStream::validate(vec![], g).unwrap();
        let desc = compute_hats(&empty, &params);
        assert_eq!(desc.len(), expect);
        assert!(desc.values().iter().all(|&v| v == 0.0));
    }

    println!("PASS criterion 3: invariance suite (time translation, cell-aligned shift, polarity separation, dimension, empty stream) on 50 cases each");
}

/// Pure neighbor-count descriptor, written independently of the library
/// oracle: counts qualifying window events per offset and divides by
/// the cell population.
fn counting_descriptor(stream: &EventStream, params: &HatsParams) -> Vec<f64> {
    let grid = CellGrid::new(stream.geometry(), params.cell_size);
    let s = params.surface.surface_len();
    let side = params.surface.side() as i64;
    let rho = params.surface.rho as i64;
    let mut hist = vec![0.0f64; grid.num_cells() * s];
    let mut counts = vec![0u64; grid.num_cells()];
    let events = stream.events();
    for (i, e) in events.iter().enumerate() {
        let l = grid.cell_index_unchecked(e.x, e.y);
        counts[l] += 1;
        let lower = e.t.saturating_sub(params.surface.delta_t);
        for j in (0..i).rev() {
            let o = &events[j];
            if o.t < lower {
                // Earlier events are older still; timestamps are sorted.
                break;
            }
            if o.t >= e.t || o.p != e.p {
                continue;
            }
            let dx = o.x as i64 - e.x as i64;
            let dy = o.y as i64 - e.y as i64;
            if dx.abs() > rho || dy.abs() > rho {
                continue;
            }
            if params.mode == Mode::Faithful && grid.cell_index_unchecked(o.x, o.y) != l {
                continue;
            }
            let slot = (((dy + rho) * side + (dx + rho)) * 2) as usize + e.p.channel();
            hist[l * s + slot] += 1.0;
        }
    }
    for l in 0..grid.num_cells() {
        if counts[l] > 0 {
            for v in &mut hist[l * s..(l + 1) * s] {
                *v /= counts[l] as f64;
            }
        }
    }
    hist
}

#[test]
fn criterion_4_counting_limit() {
    // tau = 1e12 us on streams spanning <= 1e5 us: the decay is within
    // 1e-7 of 1, so entries must match pure count averages.
    let mut rng = Rng::new(404);
    for mode in [Mode::Exact, Mode::Faithful] {
        for case in 0..20 {
            let stream = random_stream(&mut rng, 48, 2_000, 100_000);
            let rho = 1 + rng.next_below(3) as u16;
            let k = 4 + rng.next_below(13) as u16;
            let dt = 1_000 + rng.next_below(99_001);
            let params = HatsParams::new(k, SurfaceParams::new(rho, 1e12, dt), mode);
            let desc = compute_hats(&stream, &params);
            let counts = counting_descriptor(&stream, &params);
            for (i, (&a, &b)) in desc.values().iter().zip(&counts).enumerate() {
                if b == 0.0 {
                    assert_eq!(a, 0.0, "{mode:?} case {case} entry {i}: expected zero");
                } else {
                    let rel = (a - b).abs() / b;
                    assert!(rel <= 1e-6, "{mode:?} case {case} entry {i}: {a} vs count {b}");
                }
            }
        }
    }
    println!("PASS criterion 4: tau=1e12 descriptors equal neighbor-count averages (relative 1e-6) in both modes");
}

/// Summed L2 deviation (clean vs noisy history) over the signal events,
/// for the last-event and local-memory surfaces respectively.
fn surface_deviations(
    clean: &EventStream,
    noisy: &EventStream,
    params: &SurfaceParams,
) -> (f64, f64) {
    let geometry = clean.geometry();
    let mut state = PixelLastTime::new(geometry);
    let mut memory = TimestampGrid::full_sensor(geometry);
    let mut clean_last = Vec::with_capacity(clean.len());
    let mut clean_mem = Vec::with_capacity(clean.len());
    for e in clean.events() {
        clean_last.push(last_event_surface(e, &state, params));
        clean_mem.push(local_memory_surface(e, &memory, params));
        state.record(e);
        memory.insert(e, params.delta_t);
    }
    let mut state = PixelLastTime::new(geometry);
    let mut memory = TimestampGrid::full_sensor(geometry);
    let mut next = 0usize;
    let signal = clean.events();
    let (mut dev_last, mut dev_mem) = (0.0, 0.0);
    for e in noisy.events() {
        if next < signal.len() && *e == signal[next] {
            dev_last += clean_last[next].l2_distance(&last_event_surface(e, &state, params));
            dev_mem += clean_mem[next].l2_distance(&local_memory_surface(e, &memory, params));
            next += 1;
        }
        state.record(e);
        memory.insert(e, params.delta_t);
    }
    assert_eq!(next, signal.len(), "noise merge lost a signal event");
    (dev_last, dev_mem)
}

#[test]
fn criterion_5_noise_robustness() {
    let geometry = SensorGeometry::new(32, 32);
    let duration_us = 100_000u64;
    let params = SurfaceParams::new(3, 1e9, 10_000);
    let trials = 100;
    let mut wins = 0;
    for trial in 0..trials {
        let mut spec = SceneSpec::new(geometry, EdgePattern::Vertical, 320.0, duration_us);
        spec.phase_px = (trial % 16) as f64;
        spec.seed = trial;
        let clean = generate_scene(&spec);
        let rate = clean.len() as f64 / (duration_us as f64 / 1e6);
        let noisy = inject_noise(&clean, &NoiseSpec::new(0.2 * rate, 9_000 + trial));
        let (dev_last, dev_mem) = surface_deviations(&clean, &noisy, &params);
        if dev_mem < dev_last {
            wins += 1;
        }
    }
    assert!(wins >= 90, "local memory surface won only {wins}/100 noise trials");
    println!("PASS criterion 5: local memory surface deviated less than last-event surface in {wins}/100 noisy trials (>= 90 required)");
}

#[test]
fn criterion_6_auc_correctness() {
    // Hand case: one discordant pair out of four -> 0.75.
    let curve = roc_auc(&[0.9, 0.6, 0.4, 0.1], &[true, false, true, false]).unwrap();
    assert!((curve.auc - 0.75).abs() < 1e-12, "hand case auc {}", curve.auc);

    let mut rng = Rng::new(606);
    for case in 0..200 {
        let n = 2 + rng.next_below(999) as usize;
        // Quantized scores force plenty of ties.
        let scores: Vec<f64> = (0..n).map(|_| rng.next_below(20) as f64 / 10.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.next_bool()).collect();
        labels[0] = true;
        if n > 1 {
            labels[1] = false;
        }
        let fast = roc_auc(&scores, &labels).unwrap().auc;
        let slow = mann_whitney_auc(&scores, &labels);
        assert!((fast - slow).abs() < 1e-9, "case {case}: {fast} vs {slow}");
    }
    println!("PASS criterion 6: trapezoidal AUC equals pairwise Mann-Whitney oracle on 200 sets (1e-9); hand case = 0.75");
}

#[test]
fn criterion_7_end_to_end_classification() {
    let geometry = SensorGeometry::new(32, 32);
    let streams = two_class_dataset(200, geometry, &NoiseSpec::new(2_000.0, 3), 11);
    let labels = collect_labels(&streams).unwrap();
    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    let features = extract_features(&streams, &params, 1, 0).unwrap();
    let (train_idx, test_idx) = stratified_split(&labels, 0.7, 5);
    let model = train_linear_svm(
        &select_rows(&features, &train_idx),
        &select_labels(&labels, &train_idx),
        &SvmHyper::default(),
    )
    .unwrap();
    let result = evaluate(
        &model,
        &select_rows(&features, &test_idx),
        &select_labels(&labels, &test_idx),
    )
    .unwrap();
    let auc = result.roc.as_ref().expect("binary task yields a curve").auc;
    assert!(result.accuracy >= 0.95, "held-out accuracy {}", result.accuracy);
    assert!(auc >= 0.98, "held-out auc {auc}");
    println!(
        "PASS criterion 7: synthetic two-class pipeline reached held-out accuracy {:.3} (>= 0.95) and auc {:.3} (>= 0.98)",
        result.accuracy, auc
    );
}

#[test]
fn criterion_8_throughput_floor() {
    let geometry = SensorGeometry::new(64, 64);
    let streams = two_class_dataset(100, geometry, &NoiseSpec::new(30_000.0, 9), 17);
    let total: u64 = streams.iter().map(|s| s.len() as u64).sum();
    assert!(total >= 1_000_000, "corpus too small: {total} events");
    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    let runs = bench_extraction(&streams, &params, 1, 1, 3).unwrap();
    let best = runs.iter().map(|r| r.kev_per_s).fold(f64::MIN, f64::max);
    // Reference figure from the original single-laptop benchmark:
    // 555.74 Kev/s; the CI floor is deliberately lower to absorb slow
    // machines, and this implementation typically exceeds both.
    assert!(best >= 100.0, "single-threaded throughput {best:.1} Kev/s < 100");
    println!(
        "PASS criterion 8: single-threaded extraction over {total} events sustained {best:.1} Kev/s (floor 100, reference 555.74)"
    );
}

#[test]
fn criterion_9_latency_sweep_shape() {
    let geometry = SensorGeometry::new(32, 32);
    let streams = two_class_dataset(100, geometry, &NoiseSpec::new(1_000.0, 3), 11);
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
    .unwrap();
    assert_eq!(rows.len(), durations.len());
    let first = rows.first().unwrap().accuracy;
    let last = rows.last().unwrap().accuracy;
    assert!(
        last > first,
        "full-duration accuracy {last:.3} not above shortest-duration {first:.3}"
    );
    for pair in rows.windows(2) {
        assert!(
            pair[1].accuracy >= pair[0].accuracy - 0.03,
            "accuracy fell from {:.3} at {} us to {:.3} at {} us (slack 0.03)",
            pair[0].accuracy,
            pair[0].duration_us,
            pair[1].accuracy,
            pair[1].duration_us
        );
    }
    println!(
        "PASS criterion 9: accuracy rose from {:.3} at {} us to {:.3} at {} us, monotone within 0.03 slack",
        first, durations[0], last, durations[durations.len() - 1]
    );
}

/// Reproduction targets on the real datasets. Not part of CI: it needs
/// externally supplied data. Point HATS_NCARS_DIR at a directory of
/// labeled samples (see README) and run
/// `cargo test --test acceptance criterion_10 -- --ignored --nocapture`.
#[test]
#[ignore = "requires externally supplied N-CARS data (set HATS_NCARS_DIR)"]
fn criterion_10_ncars_reproduction() {
    let dir = std::env::var("HATS_NCARS_DIR").expect("set HATS_NCARS_DIR to the dataset directory");
    let streams = hats::pipeline::load_dataset_dir(std::path::Path::new(&dir)).unwrap();
    let labels = collect_labels(&streams).unwrap();
    let params = HatsParams::new(10, SurfaceParams::new(3, 1e9, 100_000), Mode::Faithful);
    let features = extract_features(&streams, &params, 1, 0).unwrap();
    let (train_idx, test_idx) = stratified_split(&labels, 0.7, 0);
    let model = train_linear_svm(
        &select_rows(&features, &train_idx),
        &select_labels(&labels, &train_idx),
        &SvmHyper::default(),
    )
    .unwrap();
    let result = evaluate(
        &model,
        &select_rows(&features, &test_idx),
        &select_labels(&labels, &test_idx),
    )
    .unwrap();
    let auc = result.roc.as_ref().map(|r| r.auc).unwrap_or(0.0);
    assert!(result.accuracy >= 0.85, "N-CARS accuracy {}", result.accuracy);
    assert!(auc >= 0.90, "N-CARS auc {auc}");
    println!(
        "PASS criterion 10: N-CARS accuracy {:.3} (>= 0.85, reference 0.902), auc {:.3} (>= 0.90, reference 0.945)",
        result.accuracy, auc
    );
}
