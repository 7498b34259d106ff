//! Core event data model: single spikes, ordered streams, event-count framing,
//! and 2D accumulation maps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sensor side length of the DVS128 retina.
pub const DVS128_SIZE: u16 = 128;

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("event ({x},{y}) outside {width}x{height} sensor grid")]
    CoordinateOutOfRange { x: u16, y: u16, width: u16, height: u16 },
    #[error("timestamps decrease at event {index} ({prev} -> {curr})")]
    NonMonotonicTimestamps { index: usize, prev: u64, curr: u64 },
    #[error("invalid framing: N={n}, B={b} (need N >= 1 and 1 <= B <= N)")]
    InvalidFraming { n: usize, b: usize },
    #[error("operation requires a non-empty window")]
    EmptyWindow,
    #[error("expected {expected} per-event values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Event polarity: ON for a brightness increase, OFF for a decrease.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    /// +1 for ON, -1 for OFF.
    pub fn sign(self) -> i32 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }
}

/// One address-event spike: pixel coordinates, microsecond timestamp, polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Timestamp in microseconds.
    pub t: u64,
    pub pol: Polarity,
}

/// An ordered sequence of events plus the sensor geometry they came from.
///
/// Timestamps are non-decreasing; construction enforces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    events: Vec<Event>,
    width: u16,
    height: u16,
    pub label: Option<String>,
}

impl EventStream {
    /// Builds a stream, rejecting out-of-range coordinates and decreasing
    /// timestamps.
    pub fn new(width: u16, height: u16, events: Vec<Event>) -> Result<Self, EventError> {
        for (i, e) in events.iter().enumerate() {
            if e.x >= width || e.y >= height {
                return Err(EventError::CoordinateOutOfRange { x: e.x, y: e.y, width, height });
            }
            if i > 0 && e.t < events[i - 1].t {
                return Err(EventError::NonMonotonicTimestamps {
                    index: i,
                    prev: events[i - 1].t,
                    curr: e.t,
                });
            }
        }
        Ok(Self { events, width, height, label: None })
    }

    /// Builds a stream from possibly out-of-order events, stably re-sorting by
    /// timestamp. Returns the stream and the number of events that arrived
    /// with a timestamp lower than their predecessor.
    pub fn from_unordered(
        width: u16,
        height: u16,
        mut events: Vec<Event>,
    ) -> Result<(Self, usize), EventError> {
        let reordered = events.windows(2).filter(|w| w[1].t < w[0].t).count();
        events.sort_by_key(|e| e.t);
        let stream = Self::new(width, height, events)?;
        Ok((stream, reordered))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Event-count framing parameters: window length `N` and step `B` in events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramingConfig {
    pub n: usize,
    pub b: usize,
}

impl FramingConfig {
    pub fn new(n: usize, b: usize) -> Result<Self, EventError> {
        if n == 0 || b == 0 || b > n {
            return Err(EventError::InvalidFraming { n, b });
        }
        Ok(Self { n, b })
    }
}

/// A window of `N` consecutive events copied out of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    events: Vec<Event>,
    start_index: usize,
    width: u16,
    height: u16,
}

impl EventWindow {
    /// Wraps an explicit event list as a window (for synthetic inputs and
    /// tests; `frame_stream` is the normal constructor).
    pub fn from_events(width: u16, height: u16, events: Vec<Event>) -> Self {
        Self { events, start_index: 0, width, height }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Position of the first event in the source stream.
    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    /// Elapsed microseconds between the first and last event (0 for empty
    /// windows).
    pub fn duration_us(&self) -> u64 {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0,
        }
    }

    /// Tight bounding box `(x_min, x_max, y_min, y_max)` over event positions.
    pub fn spatial_bounding_box(&self) -> Result<(u16, u16, u16, u16), EventError> {
        let first = self.events.first().ok_or(EventError::EmptyWindow)?;
        let mut bb = (first.x, first.x, first.y, first.y);
        for e in &self.events[1..] {
            bb.0 = bb.0.min(e.x);
            bb.1 = bb.1.max(e.x);
            bb.2 = bb.2.min(e.y);
            bb.3 = bb.3.max(e.y);
        }
        Ok(bb)
    }
}

/// Slices a stream into windows of `N` events stepping by `B` events.
///
/// Windows start at indices `0, B, 2B, ...`; a trailing partial window is
/// discarded. A stream shorter than `N` yields no windows.
pub fn frame_stream(stream: &EventStream, cfg: FramingConfig) -> Vec<EventWindow> {
    let m = stream.len();
    if m < cfg.n {
        return Vec::new();
    }
    let count = (m - cfg.n) / cfg.b + 1;
    (0..count)
        .map(|i| {
            let start = i * cfg.b;
            EventWindow {
                events: stream.events[start..start + cfg.n].to_vec(),
                start_index: start,
                width: stream.width,
                height: stream.height,
            }
        })
        .collect()
}

/// Fixed-duration framing diagnostic: windows of `duration_us` microseconds
/// stepping by `step_us`. Event counts per window vary with object speed,
/// which is exactly the artifact the event-count framing avoids.
pub fn frame_stream_fixed_duration(
    stream: &EventStream,
    duration_us: u64,
    step_us: u64,
) -> Vec<EventWindow> {
    let events = stream.events();
    if events.is_empty() || duration_us == 0 || step_us == 0 {
        return Vec::new();
    }
    let t0 = events[0].t;
    let t_end = events[events.len() - 1].t;
    let mut windows = Vec::new();
    let mut start_t = t0;
    while start_t + duration_us <= t_end.max(t0 + duration_us) {
        let start = events.partition_point(|e| e.t < start_t);
        let end = events.partition_point(|e| e.t < start_t + duration_us);
        if start >= events.len() {
            break;
        }
        if end > start {
            windows.push(EventWindow {
                events: events[start..end].to_vec(),
                start_index: start,
                width: stream.width,
                height: stream.height,
            });
        }
        if start_t + duration_us > t_end {
            break;
        }
        start_t += step_us;
    }
    windows
}

/// What an accumulation map's cells mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    /// Cells hold -1 / 0 / +1 (last polarity written, 0 = no event).
    Polarity,
    /// Cells hold 0..=V (last direction label written, 0 = none/invalid).
    Direction,
}

/// A width x height grid accumulating the last event state per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationMap {
    width: u16,
    height: u16,
    kind: MapKind,
    grid: Vec<i32>,
}

impl AccumulationMap {
    fn zeroed(width: u16, height: u16, kind: MapKind) -> Self {
        Self { width, height, kind, grid: vec![0; width as usize * height as usize] }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    /// Cell value at `(x, y)`; 0 outside the grid.
    pub fn get(&self, x: i32, y: i32) -> i32 {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return 0;
        }
        self.grid[y as usize * self.width as usize + x as usize]
    }

    fn set(&mut self, x: u16, y: u16, v: i32) {
        self.grid[y as usize * self.width as usize + x as usize] = v;
    }
}

/// Maps a window's events onto a polarity grid: +1 for ON, -1 for OFF,
/// 0 where no event fell. Later events at the same pixel overwrite earlier
/// ones.
pub fn accumulate_polarity(w: &EventWindow) -> AccumulationMap {
    let mut map = AccumulationMap::zeroed(w.width, w.height, MapKind::Polarity);
    for e in &w.events {
        map.set(e.x, e.y, e.pol.sign());
    }
    map
}

/// Maps a window's events onto a direction grid using per-event labels
/// (1..=V valid, 0 invalid). Later events at the same pixel overwrite
/// earlier ones; pixels with no event stay 0.
pub fn accumulate_direction(w: &EventWindow, dirs: &[u8]) -> Result<AccumulationMap, EventError> {
    if dirs.len() != w.events.len() {
        return Err(EventError::LengthMismatch { expected: w.events.len(), got: dirs.len() });
    }
    let mut map = AccumulationMap::zeroed(w.width, w.height, MapKind::Direction);
    for (e, &d) in w.events.iter().zip(dirs) {
        map.set(e.x, e.y, d as i32);
    }
    Ok(map)
}
