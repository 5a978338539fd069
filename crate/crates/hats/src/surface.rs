//! Per-event time-surface operators.
//!
//! Two featurizers act on an event given the stream's past: the last-event
//! surface keeps only the most recent prior event per pixel and polarity,
//! while the local memory surface sums exponentially decayed contributions
//! from every event in a trailing window of length `delta_t`. A brute-force
//! full-stream scan serves as the reference implementation.

use crate::event::{Event, EventStream, Polarity, SensorGeometry};
use std::collections::VecDeque;

/// Parameters shared by all surface operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    /// Neighborhood radius in pixels; the surface covers offsets in
    /// `[-rho, rho]^2`.
    pub rho: u16,
    /// Exponential decay constant in microseconds.
    pub tau: f64,
    /// Temporal window length in microseconds; the window is half-open,
    /// `[t_i - delta_t, t_i)`.
    pub delta_t: u64,
}

impl SurfaceParams {
    pub fn new(rho: u16, tau: f64, delta_t: u64) -> Self {
        assert!(tau > 0.0, "tau must be positive");
        assert!(delta_t > 0, "delta_t must be positive");
        SurfaceParams { rho, tau, delta_t }
    }

    /// Side length of the surface patch, `2*rho + 1`.
    #[inline]
    pub fn side(&self) -> usize {
        2 * self.rho as usize + 1
    }

    /// Number of entries in a surface: `(2*rho+1)^2 * 2`.
    #[inline]
    pub fn surface_len(&self) -> usize {
        self.side() * self.side() * 2
    }
}

/// A 2-polarity `(2*rho+1)^2` patch of non-negative values computed for a
/// single event. Laid out row-major over offsets with the polarity channel
/// innermost: index = `((z_y+rho)*(2rho+1) + (z_x+rho))*2 + channel`,
/// channel OFF = 0, ON = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    rho: u16,
    values: Vec<f64>,
}

impl Surface {
    pub fn zeros(params: &SurfaceParams) -> Self {
        Surface {
            rho: params.rho,
            values: vec![0.0; params.surface_len()],
        }
    }

    #[inline]
    pub fn rho(&self) -> u16 {
        self.rho
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn index(&self, z_x: i32, z_y: i32, p: Polarity) -> usize {
        let side = 2 * self.rho as i32 + 1;
        let row = z_y + self.rho as i32;
        let col = z_x + self.rho as i32;
        ((row * side + col) as usize) * 2 + p.channel()
    }

    /// Entry at spatial offset `(z_x, z_y)` and polarity channel `p`.
    #[inline]
    pub fn get(&self, z_x: i32, z_y: i32, p: Polarity) -> f64 {
        self.values[self.index(z_x, z_y, p)]
    }

    #[inline]
    pub fn set(&mut self, z_x: i32, z_y: i32, p: Polarity, v: f64) {
        let i = self.index(z_x, z_y, p);
        self.values[i] = v;
    }

    #[inline]
    pub fn add(&mut self, z_x: i32, z_y: i32, p: Polarity, v: f64) {
        let i = self.index(z_x, z_y, p);
        self.values[i] += v;
    }

    pub fn l2_distance(&self, other: &Surface) -> f64 {
        assert_eq!(self.rho, other.rho);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-pixel, per-polarity timestamp of the most recent event, advanced in
/// stream order by a single writer.
#[derive(Debug, Clone)]
pub struct PixelLastTime {
    geometry: SensorGeometry,
    // (y*width + x)*2 + channel; u64::MAX encodes "never".
    last: Vec<u64>,
}

const NEVER: u64 = u64::MAX;

impl PixelLastTime {
    pub fn new(geometry: SensorGeometry) -> Self {
        PixelLastTime {
            geometry,
            last: vec![NEVER; geometry.num_pixels() * 2],
        }
    }

    #[inline]
    fn slot(&self, x: u16, y: u16, p: Polarity) -> usize {
        (y as usize * self.geometry.width as usize + x as usize) * 2 + p.channel()
    }

    /// Timestamp of the most recent event at `(x, y)` with polarity `p`,
    /// or `None` if that pixel has never fired on that channel.
    #[inline]
    pub fn get(&self, x: u16, y: u16, p: Polarity) -> Option<u64> {
        match self.last[self.slot(x, y, p)] {
            NEVER => None,
            t => Some(t),
        }
    }

    /// Records `e` as the most recent event at its pixel and polarity.
    #[inline]
    pub fn record(&mut self, e: &Event) {
        let slot = self.slot(e.x, e.y, e.p);
        self.last[slot] = e.t;
    }
}

/// Last-event surface: entry `(z, p_i)` is `exp(-(t_i - t'(x_i+z, p_i)) / tau)`
/// where `t'` is the most recent prior event time at that pixel and polarity,
/// and 0 where no prior event exists. The opposite polarity channel is all
/// zeros. `state` must reflect all events strictly before `e` in stream order.
pub fn last_event_surface(e: &Event, state: &PixelLastTime, params: &SurfaceParams) -> Surface {
    let mut surface = Surface::zeros(params);
    let rho = params.rho as i32;
    let g = state.geometry;
    for z_y in -rho..=rho {
        for z_x in -rho..=rho {
            let px = e.x as i32 + z_x;
            let py = e.y as i32 + z_y;
            if px < 0 || py < 0 || !g.contains(px as u16, py as u16) {
                continue;
            }
            if let Some(t_prev) = state.get(px as u16, py as u16, e.p) {
                let age = (e.t - t_prev) as f64;
                surface.set(z_x, z_y, e.p, (-age / params.tau).exp());
            }
        }
    }
    surface
}

/// A store of recent event timestamps over a rectangular pixel region, one
/// time-ordered list per pixel and polarity. Single-writer, advanced in
/// stream order; serves both the whole-sensor memory used by
/// [`local_memory_surface`] and the per-cell memory units of the HATS
/// descriptor.
#[derive(Debug, Clone)]
pub struct TimestampGrid {
    x0: u16,
    y0: u16,
    width: usize,
    height: usize,
    lists: Vec<VecDeque<u64>>,
}

impl TimestampGrid {
    /// Store covering pixels `[x0, x0+width) x [y0, y0+height)`.
    pub fn new(x0: u16, y0: u16, width: usize, height: usize) -> Self {
        TimestampGrid {
            x0,
            y0,
            width,
            height,
            lists: vec![VecDeque::new(); width * height * 2],
        }
    }

    /// Store covering the full sensor.
    pub fn full_sensor(geometry: SensorGeometry) -> Self {
        TimestampGrid::new(0, 0, geometry.width as usize, geometry.height as usize)
    }

    #[inline]
    fn slot(&self, x: u16, y: u16, p: Polarity) -> Option<usize> {
        let lx = x.checked_sub(self.x0)? as usize;
        let ly = y.checked_sub(self.y0)? as usize;
        if lx >= self.width || ly >= self.height {
            return None;
        }
        Some((ly * self.width + lx) * 2 + p.channel())
    }

    #[inline]
    pub fn covers(&self, x: u16, y: u16) -> bool {
        x >= self.x0
            && y >= self.y0
            && ((x - self.x0) as usize) < self.width
            && ((y - self.y0) as usize) < self.height
    }

    /// Appends `e` and prunes entries of its list older than `delta_t`
    /// relative to `e`. Lists stay time-ordered because insertion follows
    /// stream order.
    pub fn insert(&mut self, e: &Event, delta_t: u64) {
        let slot = match self.slot(e.x, e.y, e.p) {
            Some(s) => s,
            None => return,
        };
        let lower = e.t.saturating_sub(delta_t);
        let list = &mut self.lists[slot];
        while let Some(&front) = list.front() {
            if front < lower {
                list.pop_front();
            } else {
                break;
            }
        }
        list.push_back(e.t);
    }

    /// Sum of `exp(-(t - t_j)/tau)` over stored timestamps `t_j` with
    /// `t - delta_t <= t_j < t` at the given pixel and polarity.
    #[inline]
    pub fn decayed_sum(&self, x: u16, y: u16, p: Polarity, t: u64, params: &SurfaceParams) -> f64 {
        let slot = match self.slot(x, y, p) {
            Some(s) => s,
            None => return 0.0,
        };
        let lower = t.saturating_sub(params.delta_t);
        let mut sum = 0.0;
        // Newest entries sit at the back; stop at the first one below the
        // window. Entries with t_j == t (timestamp ties) are skipped.
        for &t_j in self.lists[slot].iter().rev() {
            if t_j >= t {
                continue;
            }
            if t_j < lower {
                break;
            }
            sum += (-((t - t_j) as f64) / params.tau).exp();
        }
        sum
    }
}

/// Local memory time surface: entry `(z, p_i)` sums `exp(-(t_i - t_j)/tau)`
/// over all memory events at pixel `x_i + z` with polarity `p_i` and
/// `t_j` in the half-open window `[t_i - delta_t, t_i)`. The opposite
/// polarity channel is all zeros, and off-grid offsets contribute 0.
pub fn local_memory_surface(e: &Event, memory: &TimestampGrid, params: &SurfaceParams) -> Surface {
    let mut surface = Surface::zeros(params);
    let rho = params.rho as i32;
    for z_y in -rho..=rho {
        for z_x in -rho..=rho {
            let px = e.x as i32 + z_x;
            let py = e.y as i32 + z_y;
            if px < 0 || py < 0 || px > u16::MAX as i32 || py > u16::MAX as i32 {
                continue;
            }
            let sum = memory.decayed_sum(px as u16, py as u16, e.p, e.t, params);
            if sum != 0.0 {
                surface.set(z_x, z_y, e.p, sum);
            }
        }
    }
    surface
}

/// Reference implementation: computes the local memory surface of the event
/// at `index_of_e` by scanning every earlier event and applying the
/// neighborhood membership test literally.
pub fn brute_force_surface(
    stream: &EventStream,
    index_of_e: usize,
    params: &SurfaceParams,
) -> Surface {
    let e = stream.events()[index_of_e];
    let mut surface = Surface::zeros(params);
    let rho = params.rho as i32;
    let lower = e.t.saturating_sub(params.delta_t);
    for e_j in &stream.events()[..index_of_e] {
        if e_j.p != e.p || e_j.t < lower || e_j.t >= e.t {
            continue;
        }
        let z_x = e_j.x as i32 - e.x as i32;
        let z_y = e_j.y as i32 - e.y as i32;
        if z_x.abs() > rho || z_y.abs() > rho {
            continue;
        }
        surface.add(z_x, z_y, e.p, (-((e.t - e_j.t) as f64) / params.tau).exp());
    }
    surface
}
