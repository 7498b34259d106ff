//! Extended local binary patterns over accumulation maps.
//!
//! Each event pixel gets an 8-bit occupancy code: bit `i` is set when the
//! i-th 8-neighbor holds the same map value as the center (same polarity on a
//! polarity map, same direction label on a direction map). Codes that are
//! circular rotations of each other describe the same local geometry, so the
//! 256 raw codes collapse into 36 canonical connectivity classes. Each class
//! carries a tag (line / fill / lateral / endpoint / isolate) and a weight
//! used to emphasize edge-like events and damp isolated ones in the
//! histogram descriptors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{accumulate_direction, accumulate_polarity, AccumulationMap, EventWindow};

#[derive(Debug, Error, PartialEq)]
pub enum ElbpError {
    #[error("pattern center at ({x},{y}) has no event state")]
    EmptyCenter { x: u16, y: u16 },
    #[error("class id {0} outside 1..=36")]
    ClassOutOfRange(u8),
    #[error("direction coding requires per-event direction labels")]
    MissingDirections,
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
}

/// Number of canonical connectivity classes.
pub const CLASS_COUNT: usize = 36;

/// Canonical representative code of each class, ordered by class id (1..=36).
///
/// One representative per rotation orbit of the 256 raw codes. Note that a
/// few representatives are not the numeric maximum of their orbit; the table
/// itself is the definition and `class_census` in the tests proves it covers
/// every orbit exactly once.
pub const CANONICAL_PATTERNS: [u8; CLASS_COUNT] = [
    255, 254, 252, 250, 248, 246, 244, 242, 240, 238, 236, 234, 232, 230, 228, 226, 224, 214,
    212, 210, 208, 204, 202, 200, 198, 196, 194, 192, 170, 168, 164, 136, 132, 130, 128, 0,
];

const fn rotl8(x: u8, k: u32) -> u8 {
    ((x as u16) << (k % 8) | (x as u16) >> (8 - k % 8)) as u8
}

const fn build_class_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut raw = 0usize;
    while raw < 256 {
        let mut k = 0u32;
        'orbit: while k < 8 {
            let rotated = rotl8(raw as u8, k);
            let mut class = 0usize;
            while class < CLASS_COUNT {
                if CANONICAL_PATTERNS[class] == rotated {
                    table[raw] = class as u8 + 1;
                    break 'orbit;
                }
                class += 1;
            }
            k += 1;
        }
        raw += 1;
    }
    table
}

/// raw code -> class id (1..=36).
static CLASS_OF_RAW: [u8; 256] = build_class_table();

/// Connectivity family of a canonical class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectivityTag {
    Line,
    Fill,
    Lateral,
    Endpoint,
    Isolate,
}

impl ConnectivityTag {
    pub fn weight(self) -> f64 {
        match self {
            ConnectivityTag::Line => 1.0,
            ConnectivityTag::Fill => 0.75,
            ConnectivityTag::Lateral => 0.75,
            ConnectivityTag::Endpoint => 0.5,
            ConnectivityTag::Isolate => 0.3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConnectivityTag::Line => "LINE",
            ConnectivityTag::Fill => "FILL",
            ConnectivityTag::Lateral => "LATERAL",
            ConnectivityTag::Endpoint => "ENDPOINT",
            ConnectivityTag::Isolate => "ISOLATE",
        }
    }
}

const LINE_CLASSES: [u8; 14] = [11, 15, 16, 18, 19, 21, 22, 24, 25, 26, 27, 32, 33, 34];
// Class 14 is grouped with the fill family: the published weight table lists
// 13 under both FILL and LATERAL and omits 14; both rows carry 0.75, so the
// only self-consistent reading keeps 13 lateral and 14 fill.
const FILL_CLASSES: [u8; 13] = [1, 2, 3, 5, 6, 9, 12, 14, 20, 23, 29, 30, 31];
const LATERAL_CLASSES: [u8; 5] = [4, 7, 8, 10, 13];
const ENDPOINT_CLASSES: [u8; 3] = [17, 28, 35];

/// Connectivity tag of a class id (1..=36).
pub fn tag_of(class: u8) -> Result<ConnectivityTag, ElbpError> {
    if class == 0 || class as usize > CLASS_COUNT {
        return Err(ElbpError::ClassOutOfRange(class));
    }
    let tag = if LINE_CLASSES.contains(&class) {
        ConnectivityTag::Line
    } else if FILL_CLASSES.contains(&class) {
        ConnectivityTag::Fill
    } else if LATERAL_CLASSES.contains(&class) {
        ConnectivityTag::Lateral
    } else if ENDPOINT_CLASSES.contains(&class) {
        ConnectivityTag::Endpoint
    } else {
        debug_assert_eq!(class, 36);
        ConnectivityTag::Isolate
    };
    Ok(tag)
}

/// Histogram weight of a class id (1..=36).
pub fn weight_of(class: u8) -> Result<f64, ElbpError> {
    tag_of(class).map(ConnectivityTag::weight)
}

/// An 8-neighbor occupancy code together with its canonical class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCode {
    /// Raw 8-bit neighbor occupancy (bit 0 = top-left, clockwise).
    pub raw: u8,
    /// Rotation-canonical class id, 1..=36.
    pub class: u8,
    /// Number of 0<->1 changes around the circular code (always even).
    pub transitions: u8,
}

impl PatternCode {
    /// Canonical representative code of this pattern's class.
    pub fn representative(&self) -> u8 {
        CANONICAL_PATTERNS[self.class as usize - 1]
    }

    pub fn tag(&self) -> ConnectivityTag {
        tag_of(self.class).expect("class built in range")
    }

    pub fn weight(&self) -> f64 {
        self.tag().weight()
    }
}

/// Number of 0<->1 transitions around the circular 8-bit code.
pub fn transitions(raw: u8) -> u8 {
    let mut count = 0;
    for i in 0..8u32 {
        let a = (raw >> i) & 1;
        let b = (raw >> ((i + 1) % 8)) & 1;
        if a != b {
            count += 1;
        }
    }
    count
}

/// Classifies a raw code into its rotation-canonical class.
pub fn canonicalize(raw: u8) -> PatternCode {
    PatternCode { raw, class: CLASS_OF_RAW[raw as usize], transitions: transitions(raw) }
}

/// Neighbor offsets clockwise from the top-left neighbor. Bit `i` of a raw
/// code corresponds to `NEIGHBOR_OFFSETS[i]`.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] =
    [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

/// Reads the raw occupancy code at `(x, y)`: bit `i` is set when the i-th
/// neighbor holds the same non-zero map value as the center. Off-grid
/// neighbors contribute 0. The center must hold an event state.
pub fn raw_pattern(map: &AccumulationMap, x: u16, y: u16) -> Result<u8, ElbpError> {
    let center = map.get(x as i32, y as i32);
    if center == 0 {
        return Err(ElbpError::EmptyCenter { x, y });
    }
    let mut raw = 0u8;
    for (i, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
        if map.get(x as i32 + dx, y as i32 + dy) == center {
            raw |= 1 << i;
        }
    }
    Ok(raw)
}

/// Which map the connectivity codes are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodingMode {
    /// Neighbors connect when they share the center's polarity.
    Polarity,
    /// Neighbors connect when they share the center's direction label.
    Direction,
}

/// Codes every event of a window against the window's accumulation map.
///
/// In direction mode, events whose own label is 0 or whose pixel was last
/// written with label 0 are isolated by definition (class 36).
pub fn code_window(
    w: &EventWindow,
    mode: CodingMode,
    dirs: Option<&[u8]>,
) -> Result<Vec<PatternCode>, ElbpError> {
    let map = match mode {
        CodingMode::Polarity => accumulate_polarity(w),
        CodingMode::Direction => {
            let dirs = dirs.ok_or(ElbpError::MissingDirections)?;
            accumulate_direction(w, dirs)?
        }
    };
    let isolate = PatternCode { raw: 0, class: 36, transitions: 0 };
    w.events()
        .iter()
        .enumerate()
        .map(|(n, e)| {
            if mode == CodingMode::Direction {
                let own = dirs.expect("checked above")[n];
                if own == 0 || map.get(e.x as i32, e.y as i32) == 0 {
                    return Ok(isolate);
                }
            }
            Ok(canonicalize(raw_pattern(&map, e.x, e.y)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Polarity};
    use std::collections::{BTreeMap, BTreeSet};

    fn rotations(x: u8) -> BTreeSet<u8> {
        (0..8).map(|k| x.rotate_left(k)).collect()
    }

    /// Brute-force orbit enumeration, independent of the lookup table.
    fn orbits() -> Vec<BTreeSet<u8>> {
        let mut seen = BTreeSet::new();
        let mut orbits = Vec::new();
        for raw in 0..=255u8 {
            if seen.contains(&raw) {
                continue;
            }
            let orbit = rotations(raw);
            seen.extend(orbit.iter().copied());
            orbits.push(orbit);
        }
        orbits
    }

    #[test]
    fn orbit_oracle_exactly_36_classes_matching_table() {
        let orbits = orbits();
        assert_eq!(orbits.len(), 36);
        assert_eq!(orbits.iter().map(|o| o.len()).sum::<usize>(), 256);

        let table: BTreeSet<u8> = CANONICAL_PATTERNS.iter().copied().collect();
        assert_eq!(table.len(), 36);
        // Every orbit contains exactly one table entry, so the table is a
        // complete system of representatives.
        for orbit in &orbits {
            let members: Vec<u8> = orbit.intersection(&table).copied().collect();
            assert_eq!(members.len(), 1, "orbit {orbit:?}");
        }
    }

    #[test]
    fn canonicalize_is_rotation_invariant() {
        for raw in 0..=255u8 {
            let class = canonicalize(raw).class;
            for k in 0..8 {
                assert_eq!(canonicalize(raw.rotate_left(k)).class, class);
            }
        }
    }

    #[test]
    fn class_census() {
        let mut sizes: BTreeMap<u8, usize> = BTreeMap::new();
        for raw in 0..=255u8 {
            *sizes.entry(canonicalize(raw).class).or_default() += 1;
        }
        assert_eq!(sizes.len(), 36);
        assert_eq!(sizes.values().sum::<usize>(), 256);
        assert_eq!(sizes[&1], 1, "all-neighbors code is alone in class 1");
        assert_eq!(sizes[&36], 1, "empty code is alone in class 36");
        assert_eq!(canonicalize(255).class, 1);
        assert_eq!(canonicalize(0).class, 36);
    }

    #[test]
    fn known_class_examples() {
        assert_eq!(canonicalize(0).transitions, 0);
        let a = canonicalize(0b0011_0000);
        let b = canonicalize(0b1100_0000);
        assert_eq!(a.class, b.class);
        assert_eq!(a.transitions, 2);
        // left+right neighbors form a straight line through the center
        let line = canonicalize(0b1000_1000);
        assert_eq!(line.class, 32);
        assert_eq!(line.tag(), ConnectivityTag::Line);
    }

    #[test]
    fn transitions_always_even() {
        for raw in 0..=255u8 {
            assert_eq!(transitions(raw) % 2, 0);
            assert!(transitions(raw) <= 8);
        }
    }

    #[test]
    fn weight_table_totals() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for class in 1..=36u8 {
            let tag = tag_of(class).unwrap();
            *counts.entry(tag.name()).or_default() += 1;
            let w = weight_of(class).unwrap();
            assert!(
                (tag == ConnectivityTag::Line && w == 1.0)
                    || (tag == ConnectivityTag::Fill && w == 0.75)
                    || (tag == ConnectivityTag::Lateral && w == 0.75)
                    || (tag == ConnectivityTag::Endpoint && w == 0.5)
                    || (tag == ConnectivityTag::Isolate && w == 0.3)
            );
        }
        assert_eq!(counts["LINE"], 14);
        assert_eq!(counts["FILL"], 13);
        assert_eq!(counts["LATERAL"], 5);
        assert_eq!(counts["ENDPOINT"], 3);
        assert_eq!(counts["ISOLATE"], 1);
        assert_eq!(counts.values().sum::<usize>(), 36);

        assert_eq!(weight_of(36).unwrap(), 0.3);
        assert_eq!(weight_of(24).unwrap(), 1.0);
        assert_eq!(weight_of(13).unwrap(), 0.75);
        assert_eq!(weight_of(0), Err(ElbpError::ClassOutOfRange(0)));
        assert_eq!(weight_of(37), Err(ElbpError::ClassOutOfRange(37)));
    }

    fn on(x: u16, y: u16, t: u64) -> Event {
        Event { x, y, t, pol: Polarity::On }
    }

    #[test]
    fn raw_pattern_basics() {
        let w = EventWindow::from_events(16, 16, vec![on(5, 5, 0)]);
        let map = accumulate_polarity(&w);
        assert_eq!(raw_pattern(&map, 5, 5).unwrap(), 0);
        assert!(matches!(raw_pattern(&map, 0, 0), Err(ElbpError::EmptyCenter { .. })));

        let mut events = vec![on(5, 5, 0)];
        for (dx, dy) in NEIGHBOR_OFFSETS {
            events.push(on((5 + dx) as u16, (5 + dy) as u16, 1));
        }
        let w = EventWindow::from_events(16, 16, events);
        let map = accumulate_polarity(&w);
        assert_eq!(raw_pattern(&map, 5, 5).unwrap(), 255);
    }

    #[test]
    fn raw_pattern_edge_of_grid() {
        // corner event with one ON neighbor: off-grid cells read as 0
        let w = EventWindow::from_events(16, 16, vec![on(0, 0, 0), on(1, 0, 1)]);
        let map = accumulate_polarity(&w);
        let raw = raw_pattern(&map, 0, 0).unwrap();
        assert_eq!(raw.count_ones(), 1);
        assert_eq!(canonicalize(raw).class, 35);
    }

    #[test]
    fn segment_interiors_are_lines_and_ends_are_endpoints() {
        let events: Vec<Event> = (0..10).map(|i| on(3 + i, 8, i as u64)).collect();
        let w = EventWindow::from_events(16, 16, events);
        let codes = code_window(&w, CodingMode::Polarity, None).unwrap();
        for (i, code) in codes.iter().enumerate() {
            let tag = code.tag();
            if i == 0 || i == 9 {
                assert_eq!(tag, ConnectivityTag::Endpoint, "end event {i}");
            } else {
                assert_eq!(tag, ConnectivityTag::Line, "interior event {i}");
            }
        }
    }

    #[test]
    fn lone_event_is_isolated() {
        let w = EventWindow::from_events(16, 16, vec![on(1, 1, 0), on(14, 14, 1)]);
        let codes = code_window(&w, CodingMode::Polarity, None).unwrap();
        assert_eq!(codes[1].class, 36);
        assert_eq!(codes[1].weight(), 0.3);
    }

    #[test]
    fn direction_mode_mismatched_neighbors_are_isolated() {
        // neighbors all present but every adjacent event differs in direction
        let events: Vec<Event> = (0..5).map(|i| on(5 + i, 8, i as u64)).collect();
        let w = EventWindow::from_events(16, 16, events);
        let dirs = [1u8, 2, 3, 4, 1];
        let codes = code_window(&w, CodingMode::Direction, Some(&dirs)).unwrap();
        for code in &codes {
            assert_eq!(code.class, 36);
        }

        // same directions behave like the polarity map
        let dirs_same = [2u8; 5];
        let codes = code_window(&w, CodingMode::Direction, Some(&dirs_same)).unwrap();
        assert_eq!(codes[2].tag(), ConnectivityTag::Line);
    }

    #[test]
    fn direction_mode_invalid_direction_is_isolated() {
        let events = vec![on(5, 5, 0), on(6, 5, 1)];
        let w = EventWindow::from_events(16, 16, events);
        let codes = code_window(&w, CodingMode::Direction, Some(&[0, 2])).unwrap();
        assert_eq!(codes[0].class, 36);
        assert!(code_window(&w, CodingMode::Direction, None).is_err());
    }
}
