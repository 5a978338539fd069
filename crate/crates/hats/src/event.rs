//! Event data model: single change-detection events, sensor geometry and
//! validated, time-ordered event streams.

use thiserror::Error;

/// Sign of the illuminance change reported by a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Illuminance decrease (-1).
    Off,
    /// Illuminance increase (+1).
    On,
}

impl Polarity {
    /// Channel index used everywhere a surface or histogram is laid out:
    /// OFF = 0, ON = 1.
    #[inline]
    pub fn channel(self) -> usize {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Off => -1,
            Polarity::On => 1,
        }
    }

    /// Parses the on-wire value; only -1 and +1 are legal.
    pub fn from_i8(v: i8) -> Result<Self, StreamError> {
        match v {
            -1 => Ok(Polarity::Off),
            1 => Ok(Polarity::On),
            other => Err(StreamError::InvalidPolarity { value: other as i64 }),
        }
    }
}

/// A single change-detection event: pixel address, microsecond timestamp
/// and polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Pixel column, 0-based.
    pub x: u16,
    /// Pixel row, 0-based.
    pub y: u16,
    /// Timestamp in microseconds.
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    #[inline]
    pub fn new(x: u16, y: u16, t: u64, p: Polarity) -> Self {
        Event { x, y, t, p }
    }
}

/// Pixel grid dimensions of the sensor that produced a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Self {
        assert!(width >= 1 && height >= 1, "sensor dimensions must be positive");
        SensorGeometry { width, height }
    }

    #[inline]
    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Errors raised while validating or transforming event streams.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("timestamps not non-decreasing at index {index} (t={t} after t={prev})")]
    NonMonotonicTimestamps { index: usize, t: u64, prev: u64 },
    #[error("event at index {index} out of bounds: ({x},{y}) on {width}x{height} grid")]
    OutOfBoundsPixel {
        index: usize,
        x: i64,
        y: i64,
        width: u16,
        height: u16,
    },
    #[error("invalid polarity value {value}, expected -1 or +1")]
    InvalidPolarity { value: i64 },
    #[error("timestamp shift by {dt} takes event at index {index} (t={t}) below zero")]
    NegativeTimestamp { index: usize, t: u64, dt: i64 },
}

/// A validated, time-ordered sequence of events with its sensor geometry.
///
/// Immutable after validation; timestamps are non-decreasing and every
/// event lies on the pixel grid. Ties in timestamps are legal, with the
/// stream index as the tiebreak order everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
    label: Option<u32>,
}

impl EventStream {
    /// Validates ordering and bounds; rejects rather than silently reorders.
    pub fn validate(raw: Vec<Event>, geometry: SensorGeometry) -> Result<Self, StreamError> {
        let mut prev_t = 0u64;
        for (index, e) in raw.iter().enumerate() {
            if index > 0 && e.t < prev_t {
                return Err(StreamError::NonMonotonicTimestamps {
                    index,
                    t: e.t,
                    prev: prev_t,
                });
            }
            prev_t = e.t;
            if !geometry.contains(e.x, e.y) {
                return Err(StreamError::OutOfBoundsPixel {
                    index,
                    x: e.x as i64,
                    y: e.y as i64,
                    width: geometry.width,
                    height: geometry.height,
                });
            }
        }
        Ok(EventStream {
            geometry,
            events: raw,
            label: None,
        })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    #[inline]
    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    #[inline]
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    #[inline]
    pub fn label(&self) -> Option<u32> {
        self.label
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp of the first event, if any.
    pub fn first_time(&self) -> Option<u64> {
        self.events.first().map(|e| e.t)
    }

    /// Timestamp of the last event, if any.
    pub fn last_time(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    /// Events with `t` in the half-open window `[t_start, t_end)`, order,
    /// geometry and label preserved.
    pub fn slice_window(&self, t_start: u64, t_end: u64) -> EventStream {
        assert!(t_start <= t_end, "slice_window requires t_start <= t_end");
        // Binary search works because timestamps are non-decreasing.
        let lo = self.events.partition_point(|e| e.t < t_start);
        let hi = self.events.partition_point(|e| e.t < t_end);
        EventStream {
            geometry: self.geometry,
            events: self.events[lo..hi].to_vec(),
            label: self.label,
        }
    }

    /// Translates every event by `(dx, dy, dt)`. Fails if any event leaves
    /// the grid or its timestamp would go below zero.
    pub fn transform(&self, dx: i32, dy: i32, dt: i64) -> Result<EventStream, StreamError> {
        let mut events = Vec::with_capacity(self.events.len());
        for (index, e) in self.events.iter().enumerate() {
            let x = e.x as i64 + dx as i64;
            let y = e.y as i64 + dy as i64;
            if x < 0 || y < 0 || !self.geometry.contains(x as u16, y as u16) {
                return Err(StreamError::OutOfBoundsPixel {
                    index,
                    x,
                    y,
                    width: self.geometry.width,
                    height: self.geometry.height,
                });
            }
            let t = (e.t as i64).checked_add(dt).filter(|&t| t >= 0).ok_or(
                StreamError::NegativeTimestamp {
                    index,
                    t: e.t,
                    dt,
                },
            )?;
            events.push(Event::new(x as u16, y as u16, t as u64, e.p));
        }
        Ok(EventStream {
            geometry: self.geometry,
            events,
            label: self.label,
        })
    }
}
