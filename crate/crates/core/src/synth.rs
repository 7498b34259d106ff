//! Synthetic ground-truth event generators.
//!
//! Two scenario kinds at DVS128 geometry:
//!
//! - a bar spanning the retina diameter rotating at a fixed angular speed;
//!   events fire per pixel when the bar boundary crosses the pixel center
//!   (ON on the leading edge, OFF on the trailing edge), so an ideal run
//!   emits the same events per revolution at any speed;
//! - a closed polyline contour translating at constant velocity; events fire
//!   where the moving boundary crosses pixel centers, and edges parallel to
//!   the motion are invisible, as they are on the real sensor.
//!
//! Both add Poisson background noise and are deterministic given the seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SuitClass;
use crate::event::{Event, EventStream, Polarity, DVS128_SIZE};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("contour has zero length")]
    DegenerateContour,
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
}

/// Scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    RotatingBar,
    TranslatingContour,
}

/// A closed polyline in scene units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<(f64, f64)>,
}

impl Contour {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SynthError> {
        let c = Self { points };
        if c.perimeter() <= 0.0 {
            return Err(SynthError::DegenerateContour);
        }
        Ok(c)
    }

    fn perimeter(&self) -> f64 {
        if self.points.len() < 2 {
            return 0.0;
        }
        self.segments().map(|(a, b)| ((b.0 - a.0).hypot(b.1 - a.1)).abs()).sum()
    }

    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Signed shoelace area; its sign picks the outward normal side.
    fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (x0, y0) = self.points[i];
            let (x1, y1) = self.points[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        acc / 2.0
    }

    /// Scaled by `scale` and translated by `(cx, cy)`.
    fn placed(&self, scale: f64, cx: f64, cy: f64) -> Vec<(f64, f64)> {
        self.points.iter().map(|&(x, y)| (x * scale + cx, y * scale + cy)).collect()
    }
}

/// Heart outline sampled from the classic parametric curve, point at the
/// bottom (y grows downward).
fn heart_points(samples: usize) -> Vec<(f64, f64)> {
    (0..samples)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / samples as f64;
            let x = 16.0 * t.sin().powi(3);
            let y = 13.0 * t.cos() - 5.0 * (2.0 * t).cos() - 2.0 * (3.0 * t).cos() - (4.0 * t).cos();
            (x / 21.0, -y / 21.0 - 0.07)
        })
        .collect()
}

fn circle_arc(cx: f64, cy: f64, r: f64, from_deg: f64, to_deg: f64, steps: usize) -> Vec<(f64, f64)> {
    (0..=steps)
        .map(|i| {
            let a = (from_deg + (to_deg - from_deg) * i as f64 / steps as f64).to_radians();
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

/// Built-in card-symbol contours (unit scale, y growing downward), all
/// normalized to a common perimeter so the symbols yield comparable event
/// counts when swept at the same speed.
pub fn suit_contour(class: SuitClass) -> Contour {
    let points: Vec<(f64, f64)> = match class {
        SuitClass::Diamond => vec![(0.0, -0.8), (0.55, 0.0), (0.0, 0.8), (-0.55, 0.0)],
        SuitClass::Heart => heart_points(36),
        SuitClass::Spade => {
            // inverted heart body; the curve starts at the dip between the
            // lobes, which lands at the bottom cleft where the stem attaches
            let body: Vec<(f64, f64)> = heart_points(36)
                .into_iter()
                .map(|(x, y)| (x * 0.96, -y * 0.9 - 0.12))
                .collect();
            let mut out = body[1..].to_vec();
            out.extend_from_slice(&[(-0.08, 0.42), (-0.16, 0.78), (0.16, 0.78), (0.08, 0.42)]);
            out
        }
        SuitClass::Club => {
            // three round lobes and a stem
            let mut out = Vec::new();
            out.extend(circle_arc(0.0, -0.42, 0.3, 210.0, 330.0, 8)); // top lobe
            out.extend(circle_arc(0.38, 0.08, 0.3, 300.0, 430.0, 8)); // right lobe
            out.push((0.15, 0.42));
            out.push((0.24, 0.78)); // stem right
            out.push((-0.24, 0.78)); // stem left
            out.push((-0.15, 0.42));
            out.extend(circle_arc(-0.38, 0.08, 0.3, 110.0, 240.0, 8)); // left lobe
            out
        }
    };
    let raw = Contour { points };
    let factor = 4.4 / raw.perimeter();
    Contour { points: raw.points.iter().map(|&(x, y)| (x * factor, y * factor)).collect() }
}

/// Full description of one synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub kind: ScenarioKind,
    /// rad/s for the bar, px/s for the contour.
    pub speed: f64,
    /// Motion direction of the contour (normalized internally).
    pub direction: (f64, f64),
    /// Contour in unit coordinates (required for contour scenarios).
    pub shape: Option<Contour>,
    /// Contour size in pixels.
    pub scale: f64,
    /// Spurious background events per second.
    pub noise_rate: f64,
    /// Recording length in seconds.
    pub duration: f64,
    pub seed: u64,
    /// Optional transport-saturation model: maximum delivered events per
    /// second; excess events in each millisecond are dropped.
    pub max_rate: Option<f64>,
}

impl SyntheticScenario {
    pub fn rotating_bar(speed: f64, duration: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::RotatingBar,
            speed,
            direction: (1.0, 0.0),
            shape: None,
            scale: 40.0,
            noise_rate: 0.0,
            duration,
            seed,
            max_rate: None,
        }
    }

    pub fn translating_contour(shape: Contour, speed: f64, duration: f64, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::TranslatingContour,
            speed,
            direction: (1.0, 0.0),
            shape: Some(shape),
            scale: 40.0,
            noise_rate: 0.0,
            duration,
            seed,
            max_rate: None,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.speed > 0.0) {
            return Err(SynthError::InvalidScenario(format!("speed must be > 0, got {}", self.speed)));
        }
        if !(self.duration > 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        if self.noise_rate < 0.0 {
            return Err(SynthError::InvalidScenario("noise_rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// Generates the stream for any scenario kind.
pub fn generate(scenario: &SyntheticScenario) -> Result<EventStream, SynthError> {
    match scenario.kind {
        ScenarioKind::RotatingBar => synth_rotating_bar(scenario),
        ScenarioKind::TranslatingContour => synth_translating_contour(scenario),
    }
}

/// timestamp in seconds -> microseconds
fn to_us(t: f64) -> u64 {
    (t * 1e6).round().max(0.0) as u64
}

fn finish_stream(
    mut timed: Vec<(f64, u16, u16, Polarity)>,
    scenario: &SyntheticScenario,
) -> Result<EventStream, SynthError> {
    timed.extend(noise_events(scenario));
    timed.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(max_rate) = scenario.max_rate {
        timed = apply_event_loss(timed, max_rate);
    }
    let events: Vec<Event> = timed
        .into_iter()
        .map(|(t, x, y, pol)| Event { x, y, t: to_us(t), pol })
        .collect();
    let (stream, _) = EventStream::from_unordered(DVS128_SIZE, DVS128_SIZE, events)?;
    Ok(stream)
}

fn noise_events(scenario: &SyntheticScenario) -> Vec<(f64, u16, u16, Polarity)> {
    let mut out = Vec::new();
    if scenario.noise_rate <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut t = 0.0f64;
    loop {
        let gap: f64 = -rng.gen_range(1e-12..1.0f64).ln() / scenario.noise_rate;
        t += gap;
        if t >= scenario.duration {
            return out;
        }
        out.push((
            t,
            rng.gen_range(0..DVS128_SIZE),
            rng.gen_range(0..DVS128_SIZE),
            if rng.gen::<bool>() { Polarity::On } else { Polarity::Off },
        ));
    }
}

/// Drops events beyond `max_rate` within each millisecond bucket.
fn apply_event_loss(
    timed: Vec<(f64, u16, u16, Polarity)>,
    max_rate: f64,
) -> Vec<(f64, u16, u16, Polarity)> {
    let per_ms = (max_rate / 1000.0).ceil().max(1.0) as usize;
    let mut bucket = u64::MAX;
    let mut in_bucket = 0usize;
    timed
        .into_iter()
        .filter(|(t, _, _, _)| {
            let b = (t * 1000.0).floor() as u64;
            if b != bucket {
                bucket = b;
                in_bucket = 0;
            }
            in_bucket += 1;
            in_bucket <= per_ms
        })
        .collect()
}

/// Rotating-bar scenario: a diameter bar of half-width one pixel sweeping a
/// disc of radius 60 around the retina center.
pub fn synth_rotating_bar(scenario: &SyntheticScenario) -> Result<EventStream, SynthError> {
    scenario.validate()?;
    if scenario.kind != ScenarioKind::RotatingBar {
        return Err(SynthError::InvalidScenario("scenario kind is not rotating-bar".into()));
    }
    let omega = scenario.speed;
    let (cx, cy) = (63.5f64, 63.5f64);
    let (r_min, r_max) = (3.0f64, 60.0f64);
    let half_width = 1.0f64;

    let mut timed = Vec::new();
    for py in 0..DVS128_SIZE {
        for px in 0..DVS128_SIZE {
            let dx = px as f64 - cx;
            let dy = py as f64 - cy;
            let rho = dx.hypot(dy);
            if !(r_min..=r_max).contains(&rho) {
                continue;
            }
            let phi = dy.atan2(dx).rem_euclid(PI);
            let delta = (half_width / rho).atan();
            // the bar arm covers this pixel whenever omega*t = phi (mod pi);
            // crossings of the leading edge (ON) and trailing edge (OFF)
            for (edge_offset, pol) in [(-delta, Polarity::On), (delta, Polarity::Off)] {
                let first = phi + edge_offset;
                let mut k = (-first / PI).ceil() as i64;
                loop {
                    let angle = first + k as f64 * PI;
                    if angle < 0.0 {
                        k += 1;
                        continue;
                    }
                    let t = angle / omega;
                    if t >= scenario.duration {
                        break;
                    }
                    timed.push((t, px, py, pol));
                    k += 1;
                }
            }
        }
    }
    finish_stream(timed, scenario)
}

/// Translating-contour scenario. The contour is scaled to `scale` pixels and
/// swept through the retina center along `direction` at `speed` px/s.
pub fn synth_translating_contour(scenario: &SyntheticScenario) -> Result<EventStream, SynthError> {
    scenario.validate()?;
    if scenario.kind != ScenarioKind::TranslatingContour {
        return Err(SynthError::InvalidScenario("scenario kind is not translating-contour".into()));
    }
    let contour = scenario
        .shape
        .as_ref()
        .ok_or_else(|| SynthError::InvalidScenario("contour scenario needs a shape".into()))?;
    if contour.perimeter() <= 0.0 {
        return Err(SynthError::DegenerateContour);
    }
    let norm = (scenario.direction.0).hypot(scenario.direction.1);
    if norm <= 0.0 {
        return Err(SynthError::InvalidScenario("direction must be non-zero".into()));
    }
    let vel = (
        scenario.direction.0 / norm * scenario.speed,
        scenario.direction.1 / norm * scenario.speed,
    );
    // center the sweep on the retina midpoint
    let travel = (vel.0 * scenario.duration, vel.1 * scenario.duration);
    let start = (63.5 - travel.0 / 2.0, 63.5 - travel.1 / 2.0);
    let points = contour.placed(scenario.scale, start.0, start.1);
    let placed = Contour { points };
    let orient = if placed.signed_area() >= 0.0 { 1.0 } else { -1.0 };
    let points = &placed.points;

    let mut timed = Vec::new();
    let n = points.len();
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let seg = (b.0 - a.0, b.1 - a.1);
        let seg_len = seg.0.hypot(seg.1);
        if seg_len <= 0.0 {
            continue;
        }
        let det = seg.0 * vel.1 - seg.1 * vel.0;
        if det.abs() <= 1e-9 * seg_len * scenario.speed {
            // edge parallel to the motion: invisible
            continue;
        }
        // outward normal decides which side of the boundary leads
        let n_out = (orient * seg.1 / seg_len, -orient * seg.0 / seg_len);
        let pol = if n_out.0 * vel.0 + n_out.1 * vel.1 > 0.0 { Polarity::On } else { Polarity::Off };

        // pixel centers swept by this segment over the whole run
        let xs = [a.0, b.0, a.0 + travel.0, b.0 + travel.0];
        let ys = [a.1, b.1, a.1 + travel.1, b.1 + travel.1];
        let x_lo = xs.iter().cloned().fold(f64::INFINITY, f64::min).floor().max(0.0) as u16;
        let x_hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil().min(127.0) as u16;
        let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min).floor().max(0.0) as u16;
        let y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil().min(127.0) as u16;
        if x_lo > x_hi || y_lo > y_hi {
            continue;
        }
        for py in y_lo..=y_hi {
            for px in x_lo..=x_hi {
                // solve a + u*seg + t*vel = p
                let rx = px as f64 - a.0;
                let ry = py as f64 - a.1;
                let u = (rx * vel.1 - ry * vel.0) / det;
                let t = (seg.0 * ry - seg.1 * rx) / det;
                if (0.0..1.0).contains(&u) && (0.0..=scenario.duration).contains(&t) {
                    timed.push((t, px, py, pol));
                }
            }
        }
    }
    finish_stream(timed, scenario)
}

/// One key-value scenario file, e.g.
///
/// ```text
/// kind = translating-contour
/// speed = 60
/// duration = 1.5
/// seed = 7
/// shape = heart
/// noise_rate = 200
/// ```
///
/// Optional keys: `direction = dx,dy`, `scale`, `max_rate`. `shape` is a
/// built-in name (heart/club/diamond/spade) or `x1,y1;x2,y2;...`.
pub fn parse_scenario(text: &str) -> Result<SyntheticScenario, SynthError> {
    let mut kind = None;
    let mut speed = None;
    let mut duration = None;
    let mut seed = 0u64;
    let mut noise_rate = 0.0;
    let mut direction = (1.0, 0.0);
    let mut scale = 40.0;
    let mut shape = None;
    let mut max_rate = None;

    let bad = |key: &str, value: &str| {
        SynthError::InvalidScenario(format!("bad value {value:?} for key {key:?}"))
    };
    for raw_line in text.lines() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| SynthError::InvalidScenario(format!("expected key = value, got {line:?}")))?;
        match key {
            "kind" => {
                kind = Some(match value {
                    "rotating-bar" => ScenarioKind::RotatingBar,
                    "translating-contour" => ScenarioKind::TranslatingContour,
                    other => return Err(SynthError::InvalidScenario(format!("unknown kind {other:?}"))),
                })
            }
            "speed" => speed = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "duration" => duration = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "seed" => seed = value.parse::<u64>().map_err(|_| bad(key, value))?,
            "noise_rate" => noise_rate = value.parse::<f64>().map_err(|_| bad(key, value))?,
            "scale" => scale = value.parse::<f64>().map_err(|_| bad(key, value))?,
            "max_rate" => max_rate = Some(value.parse::<f64>().map_err(|_| bad(key, value))?),
            "direction" => {
                let (dx, dy) = value.split_once(',').ok_or_else(|| bad(key, value))?;
                direction = (
                    dx.trim().parse::<f64>().map_err(|_| bad(key, value))?,
                    dy.trim().parse::<f64>().map_err(|_| bad(key, value))?,
                );
            }
            "shape" => {
                shape = Some(match value {
                    "heart" => suit_contour(SuitClass::Heart),
                    "club" => suit_contour(SuitClass::Club),
                    "diamond" => suit_contour(SuitClass::Diamond),
                    "spade" => suit_contour(SuitClass::Spade),
                    polyline => {
                        let points: Result<Vec<(f64, f64)>, SynthError> = polyline
                            .split(';')
                            .map(|pair| {
                                let (x, y) = pair.split_once(',').ok_or_else(|| bad(key, value))?;
                                Ok((
                                    x.trim().parse::<f64>().map_err(|_| bad(key, value))?,
                                    y.trim().parse::<f64>().map_err(|_| bad(key, value))?,
                                ))
                            })
                            .collect();
                        Contour::new(points?)?
                    }
                })
            }
            other => return Err(SynthError::InvalidScenario(format!("unknown key {other:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| SynthError::InvalidScenario("missing key \"kind\"".into()))?;
    let speed = speed.ok_or_else(|| SynthError::InvalidScenario("missing key \"speed\"".into()))?;
    let duration =
        duration.ok_or_else(|| SynthError::InvalidScenario("missing key \"duration\"".into()))?;
    if kind == ScenarioKind::TranslatingContour && shape.is_none() {
        return Err(SynthError::InvalidScenario("contour scenario needs a shape".into()));
    }
    let scenario = SyntheticScenario {
        kind,
        speed,
        direction,
        shape,
        scale,
        noise_rate,
        duration,
        seed,
        max_rate,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parameters of the bundled four-symbol synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub seed: u64,
    pub streams_per_class: usize,
    /// Contour speed in px/s.
    pub speed: f64,
    pub scale: f64,
    pub duration: f64,
    /// Noise events as a fraction of the noiseless signal count.
    pub noise_fraction: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            seed: 7,
            streams_per_class: 2,
            speed: 60.0,
            scale: 38.0,
            duration: 1.2,
            noise_fraction: 0.05,
        }
    }
}

/// Builds labeled translating-contour streams for all four symbols, with
/// noise calibrated to the requested fraction of each stream's signal count.
pub fn build_suit_corpus(params: &CorpusParams) -> Result<Vec<(EventStream, SuitClass)>, SynthError> {
    let mut corpus = Vec::new();
    for (ci, class) in SuitClass::ALL.iter().enumerate() {
        for rep in 0..params.streams_per_class {
            let seed = params.seed
                .wrapping_mul(0x100_0003)
                .wrapping_add((ci * 97 + rep) as u64);
            let mut scenario =
                SyntheticScenario::translating_contour(suit_contour(*class), params.speed, params.duration, seed);
            scenario.scale = params.scale;
            // mild per-repetition pose variation
            scenario.direction = (1.0, 0.3 + 0.06 * rep as f64);
            let clean = synth_translating_contour(&scenario)?;
            if params.noise_fraction > 0.0 {
                scenario.noise_rate =
                    params.noise_fraction * clean.len() as f64 / params.duration;
                corpus.push((synth_translating_contour(&scenario)?.with_label(class.name()), *class));
            } else {
                corpus.push((clean.with_label(class.name()), *class));
            }
        }
    }
    Ok(corpus)
}
