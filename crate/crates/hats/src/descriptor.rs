//! The HATS descriptor: per-cell histograms of averaged local memory time
//! surfaces, computed in a single streaming pass over the event stream with
//! one shared memory unit per cell.
//!
//! Two modes resolve what a memory unit stores. `Faithful` inserts each
//! event only into its own cell's unit, so neighbors in adjacent cells are
//! invisible to the surface sum; this is the benchmarked algorithm.
//! `Exact` inserts each event into every unit whose cell, dilated by
//! `rho`, contains it, recovering the full-neighborhood surface verbatim.

use crate::event::{Event, EventStream, SensorGeometry, StreamError};
use crate::surface::{SurfaceParams, TimestampGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Per-cell memory only; cross-cell neighbors are dropped.
    Faithful,
    /// Memory units store every event their dilated cell covers.
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "faithful" => Ok(Mode::Faithful),
            "exact" => Ok(Mode::Exact),
            other => Err(format!("unknown mode '{other}', expected faithful|exact")),
        }
    }
}

/// Optional L2 block normalization over groups of adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockNorm {
    /// Block side length in cells.
    pub cells: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatsParams {
    /// Cell side length K in pixels.
    pub cell_size: u16,
    pub surface: SurfaceParams,
    pub mode: Mode,
    /// Off by default; block normalization did not help on the two-class
    /// car task and is opt-in.
    pub block_norm: Option<BlockNorm>,
}

impl HatsParams {
    pub fn new(cell_size: u16, surface: SurfaceParams, mode: Mode) -> Self {
        assert!(cell_size >= 1, "cell size must be at least 1");
        HatsParams {
            cell_size,
            surface,
            mode,
            block_norm: None,
        }
    }

    pub fn with_block_norm(mut self, cells: u16) -> Self {
        assert!(cells >= 1, "block side must be at least 1");
        self.block_norm = Some(BlockNorm { cells });
        self
    }

    /// Total descriptor length for a sensor:
    /// `ceil(M/K) * ceil(N/K) * (2*rho+1)^2 * 2`.
    pub fn descriptor_len(&self, geometry: SensorGeometry) -> usize {
        CellGrid::new(geometry, self.cell_size).num_cells() * self.surface.surface_len()
    }

    /// Compact provenance string recorded next to features and models.
    pub fn fingerprint(&self) -> String {
        let block = match self.block_norm {
            Some(b) => format!("l2:{}", b.cells),
            None => "off".to_string(),
        };
        format!(
            "K={},rho={},tau={},dt={},mode={},block={}",
            self.cell_size,
            self.surface.rho,
            self.surface.tau,
            self.surface.delta_t,
            match self.mode {
                Mode::Faithful => "faithful",
                Mode::Exact => "exact",
            },
            block
        )
    }
}

/// Partition of the pixel grid into K x K cells, row-major; border cells
/// may be smaller than K x K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellGrid {
    geometry: SensorGeometry,
    cell_size: u16,
    cols: usize,
    rows: usize,
}

impl CellGrid {
    pub fn new(geometry: SensorGeometry, cell_size: u16) -> Self {
        assert!(cell_size >= 1);
        let k = cell_size as usize;
        CellGrid {
            geometry,
            cell_size,
            cols: (geometry.width as usize).div_ceil(k),
            rows: (geometry.height as usize).div_ceil(k),
        }
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.cols * self.rows
    }

    #[inline]
    pub fn cell_size(&self) -> u16 {
        self.cell_size
    }

    #[inline]
    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    /// `l = floor(y/K) * ceil(M/K) + floor(x/K)`; caller guarantees bounds.
    #[inline]
    pub fn cell_index_unchecked(&self, x: u16, y: u16) -> usize {
        (y / self.cell_size) as usize * self.cols + (x / self.cell_size) as usize
    }

    /// Pixel rectangle `(x0, y0, width, height)` of cell `l`, clipped to
    /// the sensor.
    pub fn cell_rect(&self, l: usize) -> (u16, u16, usize, usize) {
        let k = self.cell_size as usize;
        let col = l % self.cols;
        let row = l / self.cols;
        let x0 = col * k;
        let y0 = row * k;
        let w = k.min(self.geometry.width as usize - x0);
        let h = k.min(self.geometry.height as usize - y0);
        (x0 as u16, y0 as u16, w, h)
    }
}

/// Cell index of a pixel.
pub fn get_cell(x: u16, y: u16, grid: &CellGrid) -> Result<usize, StreamError> {
    if !grid.geometry.contains(x, y) {
        return Err(StreamError::OutOfBoundsPixel {
            index: 0,
            x: x as i64,
            y: y as i64,
            width: grid.geometry.width,
            height: grid.geometry.height,
        });
    }
    Ok(grid.cell_index_unchecked(x, y))
}

/// Per-cell store of recent events, organized per pixel and polarity with
/// timestamps kept in arrival order. In faithful mode the unit covers its
/// cell's rectangle; in exact mode the rectangle dilated by `rho`.
#[derive(Debug, Clone)]
pub struct MemoryUnit {
    store: TimestampGrid,
}

impl MemoryUnit {
    pub fn for_cell(grid: &CellGrid, l: usize, params: &HatsParams) -> Self {
        let (x0, y0, w, h) = grid.cell_rect(l);
        let store = match params.mode {
            Mode::Faithful => TimestampGrid::new(x0, y0, w, h),
            Mode::Exact => {
                let rho = params.surface.rho as usize;
                let gx0 = (x0 as usize).saturating_sub(rho);
                let gy0 = (y0 as usize).saturating_sub(rho);
                let gx1 = (x0 as usize + w + rho).min(grid.geometry.width as usize);
                let gy1 = (y0 as usize + h + rho).min(grid.geometry.height as usize);
                TimestampGrid::new(gx0 as u16, gy0 as u16, gx1 - gx0, gy1 - gy0)
            }
        };
        MemoryUnit { store }
    }

    /// Appends `e`, pruning its timestamp list to the trailing `delta_t`
    /// window.
    pub fn update(&mut self, e: &Event, params: &HatsParams) {
        self.store.insert(e, params.surface.delta_t);
    }

    pub fn store(&self) -> &TimestampGrid {
        &self.store
    }
}

/// Running unnormalized histogram of one cell plus its event count.
#[derive(Debug, Clone)]
pub struct CellAccumulator {
    hist: Vec<f64>,
    count: u64,
}

impl CellAccumulator {
    fn new(len: usize) -> Self {
        CellAccumulator {
            hist: vec![0.0; len],
            count: 0,
        }
    }

    pub fn hist(&self) -> &[f64] {
        &self.hist
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Concatenated, event-count-normalized cell histograms, cell-major with
/// inner order `(z_y, z_x, q)`, q OFF then ON.
#[derive(Debug, Clone, PartialEq)]
pub struct HatsDescriptor {
    values: Vec<f64>,
    fingerprint: String,
}

impl HatsDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One in-progress HATS computation. Owns its memory units and cell
/// accumulators; events must be pushed in stream order. Each event is read
/// exactly once.
pub struct StreamingHats {
    params: HatsParams,
    grid: CellGrid,
    units: Vec<MemoryUnit>,
    accumulators: Vec<CellAccumulator>,
}

impl StreamingHats {
    pub fn new(geometry: SensorGeometry, params: HatsParams) -> Self {
        let grid = CellGrid::new(geometry, params.cell_size);
        let surface_len = params.surface.surface_len();
        let units = (0..grid.num_cells())
            .map(|l| MemoryUnit::for_cell(&grid, l, &params))
            .collect();
        let accumulators = (0..grid.num_cells())
            .map(|_| CellAccumulator::new(surface_len))
            .collect();
        StreamingHats {
            params,
            grid,
            units,
            accumulators,
        }
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    /// Processes one event: resolves its cell, adds its local memory time
    /// surface into the cell histogram, then stores the event in the
    /// covering memory unit(s).
    pub fn push(&mut self, e: &Event) {
        debug_assert!(self.grid.geometry.contains(e.x, e.y));
        let l = self.grid.cell_index_unchecked(e.x, e.y);
        let sp = &self.params.surface;
        let rho = sp.rho as i32;
        let side = sp.side();
        let store = self.units[l].store();
        let acc = &mut self.accumulators[l];
        // Accumulate the surface of e straight into the cell histogram;
        // only the channel of e's own polarity can be nonzero.
        let channel = e.p.channel();
        for z_y in -rho..=rho {
            let py = e.y as i32 + z_y;
            if py < 0 || py > u16::MAX as i32 {
                continue;
            }
            let row_base = ((z_y + rho) as usize * side) * 2 + channel;
            for z_x in -rho..=rho {
                let px = e.x as i32 + z_x;
                if px < 0 || px > u16::MAX as i32 {
                    continue;
                }
                let sum = store.decayed_sum(px as u16, py as u16, e.p, e.t, sp);
                if sum != 0.0 {
                    acc.hist[row_base + (z_x + rho) as usize * 2] += sum;
                }
            }
        }
        acc.count += 1;
        self.insert_into_memory(e);
    }

    fn insert_into_memory(&mut self, e: &Event) {
        match self.params.mode {
            Mode::Faithful => {
                let l = self.grid.cell_index_unchecked(e.x, e.y);
                self.units[l].update(e, &self.params);
            }
            Mode::Exact => {
                // Every cell whose dilated rectangle contains e, i.e. every
                // cell overlapping the rho-box around e.
                let k = self.grid.cell_size;
                let rho = self.params.surface.rho;
                let c_lo = (e.x.saturating_sub(rho) / k) as usize;
                let c_hi = ((e.x.saturating_add(rho)).min(self.grid.geometry.width - 1) / k) as usize;
                let r_lo = (e.y.saturating_sub(rho) / k) as usize;
                let r_hi = ((e.y.saturating_add(rho)).min(self.grid.geometry.height - 1) / k) as usize;
                for r in r_lo..=r_hi {
                    for c in c_lo..=c_hi {
                        self.units[r * self.grid.cols + c].update(e, &self.params);
                    }
                }
            }
        }
    }

    /// Emits the descriptor: per-cell histograms divided by their event
    /// counts (cells with no events emit zeros), concatenated cell-major,
    /// with block normalization applied when configured.
    pub fn finish(self) -> HatsDescriptor {
        let surface_len = self.params.surface.surface_len();
        let mut values = vec![0.0; self.grid.num_cells() * surface_len];
        for (l, acc) in self.accumulators.iter().enumerate() {
            if acc.count == 0 {
                continue;
            }
            let inv = 1.0 / acc.count as f64;
            let out = &mut values[l * surface_len..(l + 1) * surface_len];
            for (o, h) in out.iter_mut().zip(&acc.hist) {
                *o = h * inv;
            }
        }
        let mut desc = HatsDescriptor {
            values,
            fingerprint: self.params.fingerprint(),
        };
        if let Some(block) = self.params.block_norm {
            desc = block_normalize(&desc, &self.grid, block.cells);
        }
        desc
    }
}

/// Computes the HATS descriptor of a validated stream in a single pass.
pub fn compute_hats(stream: &EventStream, params: &HatsParams) -> HatsDescriptor {
    compute_hats_from_events(stream.geometry(), stream.events().iter(), params)
}

/// Streaming entry point: consumes events in order from any iterator.
pub fn compute_hats_from_events<'a, I>(
    geometry: SensorGeometry,
    events: I,
    params: &HatsParams,
) -> HatsDescriptor
where
    I: Iterator<Item = &'a Event>,
{
    let mut state = StreamingHats::new(geometry, params.clone());
    for e in events {
        state.push(e);
    }
    state.finish()
}

/// Reference implementation: evaluates every event's surface by a full
/// scan of the stream prefix, honoring the mode's neighbor visibility.
/// Intended for small streams.
pub fn hats_oracle(stream: &EventStream, params: &HatsParams) -> HatsDescriptor {
    let grid = CellGrid::new(stream.geometry(), params.cell_size);
    let surface_len = params.surface.surface_len();
    let rho = params.surface.rho as i32;
    let side = params.surface.side();
    let mut hist = vec![0.0; grid.num_cells() * surface_len];
    let mut counts = vec![0u64; grid.num_cells()];
    let events = stream.events();
    for (i, e) in events.iter().enumerate() {
        let l = grid.cell_index_unchecked(e.x, e.y);
        counts[l] += 1;
        let lower = e.t.saturating_sub(params.surface.delta_t);
        for e_j in &events[..i] {
            if e_j.p != e.p || e_j.t < lower || e_j.t >= e.t {
                continue;
            }
            let z_x = e_j.x as i32 - e.x as i32;
            let z_y = e_j.y as i32 - e.y as i32;
            if z_x.abs() > rho || z_y.abs() > rho {
                continue;
            }
            if params.mode == Mode::Faithful && grid.cell_index_unchecked(e_j.x, e_j.y) != l {
                continue;
            }
            let idx = (((z_y + rho) as usize * side) + (z_x + rho) as usize) * 2 + e.p.channel();
            hist[l * surface_len + idx] += (-((e.t - e_j.t) as f64) / params.surface.tau).exp();
        }
    }
    let mut values = hist;
    for (l, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        for v in &mut values[l * surface_len..(l + 1) * surface_len] {
            *v /= count as f64;
        }
    }
    let mut desc = HatsDescriptor {
        values,
        fingerprint: params.fingerprint(),
    };
    if let Some(block) = params.block_norm {
        desc = block_normalize(&desc, &grid, block.cells);
    }
    desc
}

const BLOCK_NORM_EPS: f64 = 1e-12;

/// Divides each block of adjacent cells by its L2 norm plus a small
/// epsilon; all-zero blocks pass through unchanged.
pub fn block_normalize(desc: &HatsDescriptor, grid: &CellGrid, block_cells: u16) -> HatsDescriptor {
    assert!(block_cells >= 1);
    let cell_dim = desc.values.len() / grid.num_cells().max(1);
    let mut values = desc.values.clone();
    let b = block_cells as usize;
    let block_rows = grid.rows().div_ceil(b);
    let block_cols = grid.cols().div_ceil(b);
    for br in 0..block_rows {
        for bc in 0..block_cols {
            let mut cells = Vec::new();
            for r in br * b..((br + 1) * b).min(grid.rows()) {
                for c in bc * b..((bc + 1) * b).min(grid.cols()) {
                    cells.push(r * grid.cols() + c);
                }
            }
            let norm_sq: f64 = cells
                .iter()
                .flat_map(|&l| &values[l * cell_dim..(l + 1) * cell_dim])
                .map(|v| v * v)
                .sum();
            if norm_sq == 0.0 {
                continue;
            }
            let inv = 1.0 / (norm_sq.sqrt() + BLOCK_NORM_EPS);
            for &l in &cells {
                for v in &mut values[l * cell_dim..(l + 1) * cell_dim] {
                    *v *= inv;
                }
            }
        }
    }
    HatsDescriptor {
        values,
        fingerprint: desc.fingerprint.clone(),
    }
}

/// Splits the stream into `window_count` consecutive windows of length
/// `delta_t` anchored at the first event's timestamp, computes an
/// independent descriptor per window (memory units reset between windows)
/// and concatenates them in time order. Windows beyond the stream's extent
/// yield zero blocks.
pub fn stack_windows(stream: &EventStream, params: &HatsParams, window_count: u32) -> Vec<f64> {
    assert!(window_count >= 1, "window count must be at least 1");
    let dim = params.descriptor_len(stream.geometry());
    let mut out = Vec::with_capacity(dim * window_count as usize);
    let t0 = stream.first_time().unwrap_or(0);
    for w in 0..window_count as u64 {
        let start = t0 + w * params.surface.delta_t;
        let end = start + params.surface.delta_t;
        let window = stream.slice_window(start, end);
        out.extend_from_slice(compute_hats(&window, params).values());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Polarity;

    fn params(k: u16, rho: u16, tau: f64, dt: u64, mode: Mode) -> HatsParams {
        HatsParams::new(k, SurfaceParams::new(rho, tau, dt), mode)
    }

    fn ev(x: u16, y: u16, t: u64, p: Polarity) -> Event {
        Event::new(x, y, t, p)
    }

    fn random_stream(seed: u64, n: usize, w: u16, h: u16, max_gap: u64) -> EventStream {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut t = 0u64;
        let mut events = Vec::with_capacity(n);
        for _ in 0..n {
            let r = next();
            t += r % (max_gap + 1);
            let p = if r & 1 == 0 { Polarity::On } else { Polarity::Off };
            events.push(ev((r >> 8) as u16 % w, (r >> 24) as u16 % h, t, p));
        }
        EventStream::validate(events, SensorGeometry::new(w, h)).unwrap()
    }

    #[test]
    fn get_cell_formula() {
        let grid = CellGrid::new(SensorGeometry::new(30, 30), 10);
        assert_eq!(get_cell(0, 0, &grid).unwrap(), 0);
        assert_eq!(get_cell(10, 0, &grid).unwrap(), 1);
        assert_eq!(get_cell(29, 29, &grid).unwrap(), 8);
        assert!(get_cell(30, 0, &grid).is_err());
    }

    #[test]
    fn border_cells_are_partial() {
        let grid = CellGrid::new(SensorGeometry::new(25, 13), 10);
        assert_eq!((grid.cols(), grid.rows()), (3, 2));
        assert_eq!(grid.cell_rect(2), (20, 0, 5, 10));
        assert_eq!(grid.cell_rect(5), (20, 10, 5, 3));
    }

    #[test]
    fn memory_update_insert_and_expire() {
        let grid = CellGrid::new(SensorGeometry::new(20, 20), 10);
        let p = params(10, 2, 100.0, 1000, Mode::Faithful);
        let mut unit = MemoryUnit::for_cell(&grid, 0, &p);
        let e0 = ev(3, 3, 0, Polarity::On);
        unit.update(&e0, &p);
        let sp = SurfaceParams::new(0, 1e12, 1000);
        assert!(unit.store().decayed_sum(3, 3, Polarity::On, 500, &sp) > 0.99);
        // An event two windows later expires the old entry; only the new
        // one remains even under an arbitrarily wide query window.
        let e1 = ev(3, 3, 2000, Polarity::On);
        unit.update(&e1, &p);
        let wide = SurfaceParams::new(0, 1e12, 1_000_000);
        let sum = unit.store().decayed_sum(3, 3, Polarity::On, 2500, &wide);
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn memory_contents_match_full_scan_filter() {
        // Oracle: a full-scan filter over the stream selects exactly the
        // events a memory unit can still serve for a fresh query.
        let s = random_stream(5, 400, 20, 20, 25);
        let p = params(10, 2, 100.0, 300, Mode::Faithful);
        let grid = CellGrid::new(s.geometry(), p.cell_size);
        let mut unit = MemoryUnit::for_cell(&grid, 0, &p);
        for e in s.events() {
            if grid.cell_index_unchecked(e.x, e.y) == 0 {
                unit.update(e, &p);
            }
        }
        let t_query = s.last_time().unwrap() + 1;
        let sp = SurfaceParams::new(0, 1e12, p.surface.delta_t);
        for x in 0..10u16 {
            for y in 0..10u16 {
                for pol in [Polarity::On, Polarity::Off] {
                    let expected = s
                        .events()
                        .iter()
                        .filter(|e| {
                            e.x == x
                                && e.y == y
                                && e.p == pol
                                && e.t >= t_query.saturating_sub(p.surface.delta_t)
                        })
                        .count() as f64;
                    let got = unit.store().decayed_sum(x, y, pol, t_query, &sp);
                    assert!((got - expected).abs() < 1e-6 * expected.max(1.0));
                }
            }
        }
    }

    #[test]
    fn empty_stream_zero_descriptor() {
        let g = SensorGeometry::new(32, 32);
        let s = EventStream::validate(vec![], g).unwrap();
        let p = params(8, 2, 100.0, 1000, Mode::Faithful);
        let d = compute_hats(&s, &p);
        assert_eq!(d.len(), p.descriptor_len(g));
        assert_eq!(d.len(), 16 * 50);
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_event_cell_average() {
        // Two same-pixel ON events one tau apart: |C|=2, one surface term
        // of e^-1, so the descriptor entry is e^-1 / 2.
        let g = SensorGeometry::new(8, 8);
        let tau = 100.0;
        let s = EventStream::validate(
            vec![ev(3, 3, 0, Polarity::On), ev(3, 3, 100, Polarity::On)],
            g,
        )
        .unwrap();
        let p = params(8, 1, tau, 1_000_000, Mode::Faithful);
        let d = compute_hats(&s, &p);
        let expected = (-1.0f64).exp() / 2.0;
        assert!((expected - 0.1839397).abs() < 1e-6);
        let center = ((1usize * 3) + 1) * 2 + Polarity::On.channel();
        for (i, &v) in d.values().iter().enumerate() {
            if i == center {
                assert!((v - expected).abs() < 1e-12);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn streaming_matches_oracle_exact_mode() {
        let s = random_stream(11, 2000, 32, 32, 30);
        let p = params(7, 2, 150.0, 800, Mode::Exact);
        let fast = compute_hats(&s, &p);
        let slow = hats_oracle(&s, &p);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn streaming_matches_oracle_faithful_mode() {
        let s = random_stream(12, 2000, 32, 32, 30);
        let p = params(7, 2, 150.0, 800, Mode::Faithful);
        let fast = compute_hats(&s, &p);
        let slow = hats_oracle(&s, &p);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_single_event() {
        let g = SensorGeometry::new(16, 16);
        let s = EventStream::validate(vec![ev(5, 5, 10, Polarity::On)], g).unwrap();
        let p = params(8, 2, 100.0, 1000, Mode::Exact);
        let d = hats_oracle(&s, &p);
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_modes_agree_when_contained() {
        // All events inside one cell with rho < K: the cell restriction
        // is vacuous and both oracle variants coincide.
        let g = SensorGeometry::new(16, 16);
        let mut events = Vec::new();
        let mut t = 0;
        for i in 0..40u64 {
            t += 13;
            let p = if i % 3 == 0 { Polarity::Off } else { Polarity::On };
            events.push(ev(2 + (i % 4) as u16, 2 + (i / 7 % 4) as u16, t, p));
        }
        let s = EventStream::validate(events, g).unwrap();
        let p_f = params(8, 1, 80.0, 400, Mode::Faithful);
        let p_e = params(8, 1, 80.0, 400, Mode::Exact);
        assert_eq!(hats_oracle(&s, &p_f).values(), hats_oracle(&s, &p_e).values());
    }

    #[test]
    fn block_normalize_zero_passthrough() {
        let g = SensorGeometry::new(16, 16);
        let grid = CellGrid::new(g, 8);
        let p = params(8, 1, 100.0, 1000, Mode::Faithful);
        let d = compute_hats(&EventStream::validate(vec![], g).unwrap(), &p);
        let n = block_normalize(&d, &grid, 1);
        assert!(n.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_normalize_three_four_five() {
        let g = SensorGeometry::new(4, 4);
        let grid = CellGrid::new(g, 4);
        let mut values = vec![0.0; 18];
        values[0] = 3.0;
        values[1] = 4.0;
        let d = HatsDescriptor {
            values,
            fingerprint: String::new(),
        };
        let n = block_normalize(&d, &grid, 1);
        assert!((n.values()[0] - 0.6).abs() < 1e-9);
        assert!((n.values()[1] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn block_normalize_unit_norms() {
        let s = random_stream(21, 1500, 32, 32, 20);
        let p = params(8, 1, 100.0, 600, Mode::Faithful);
        let grid = CellGrid::new(s.geometry(), 8);
        let d = compute_hats(&s, &p);
        let n = block_normalize(&d, &grid, 2);
        let cell_dim = d.len() / grid.num_cells();
        for br in 0..grid.rows().div_ceil(2) {
            for bc in 0..grid.cols().div_ceil(2) {
                let mut norm_sq = 0.0;
                let mut orig_norm_sq = 0.0;
                for r in br * 2..((br + 1) * 2).min(grid.rows()) {
                    for c in bc * 2..((bc + 1) * 2).min(grid.cols()) {
                        let l = r * grid.cols() + c;
                        for i in l * cell_dim..(l + 1) * cell_dim {
                            norm_sq += n.values()[i] * n.values()[i];
                            orig_norm_sq += d.values()[i] * d.values()[i];
                        }
                    }
                }
                if orig_norm_sq > 0.0 {
                    assert!((norm_sq.sqrt() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stack_single_window_equals_full() {
        let s = random_stream(31, 500, 16, 16, 10);
        let span = s.last_time().unwrap() - s.first_time().unwrap();
        let p = params(8, 1, 100.0, span + 1, Mode::Faithful);
        let stacked = stack_windows(&s, &p, 1);
        assert_eq!(stacked, compute_hats(&s, &p).values());
    }

    #[test]
    fn stack_empty_second_window() {
        let s = random_stream(32, 200, 16, 16, 5);
        let span = s.last_time().unwrap() - s.first_time().unwrap();
        let p = params(8, 1, 100.0, span + 1, Mode::Faithful);
        let stacked = stack_windows(&s, &p, 2);
        let dim = p.descriptor_len(s.geometry());
        assert_eq!(stacked.len(), 2 * dim);
        assert!(stacked[dim..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_windows_match_sliced_recomputation() {
        let s = random_stream(33, 900, 16, 16, 8);
        let p = params(8, 1, 100.0, 1000, Mode::Faithful);
        let stacked = stack_windows(&s, &p, 3);
        let dim = p.descriptor_len(s.geometry());
        let t0 = s.first_time().unwrap();
        for w in 0..3u64 {
            let window = s.slice_window(t0 + w * 1000, t0 + (w + 1) * 1000);
            let expected = compute_hats(&window, &p);
            assert_eq!(
                &stacked[w as usize * dim..(w as usize + 1) * dim],
                expected.values()
            );
        }
    }
}
