//! Ring-structured shape contexts of events in normalized 3D space.
//!
//! Window coordinates `(x, y, t)` are normalized per-axis to zero mean and
//! unit variance, which removes scale (and in particular object speed) from
//! the representation. Around each valid-direction event, neighbor events
//! are binned by their 3D distance into `R` log-spaced rings (optionally
//! split into two hemisphere cells by vertical position) and by direction.
//! Per-event contexts are grouped by the reference event's own direction and
//! mean-pooled per group, giving a window descriptor of fixed length
//! `cells * V * R * V` regardless of window length.

use serde::{Deserialize, Serialize};

use super::DescriptorError;
use crate::event::EventWindow;
use crate::orientation::OrientedEvent;

/// Ring layout parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingConfig {
    /// Number of rings.
    pub rings: usize,
    /// Number of direction bins (must match the orientation config).
    pub directions: usize,
    /// 1 = whole rings (inversion invariant), 2 = upper/lower hemisphere
    /// cells (captures vertical orientation).
    pub hemispheres: usize,
}

impl RingConfig {
    pub fn new(rings: usize, directions: usize, hemispheres: usize) -> Result<Self, DescriptorError> {
        if rings == 0 {
            return Err(DescriptorError::InvalidRingConfig("rings must be >= 1".into()));
        }
        if directions < 2 {
            return Err(DescriptorError::InvalidRingConfig("directions must be >= 2".into()));
        }
        if !(1..=2).contains(&hemispheres) {
            return Err(DescriptorError::InvalidRingConfig("hemispheres must be 1 or 2".into()));
        }
        Ok(Self { rings, directions, hemispheres })
    }

    /// Five log-spaced rings, one cell.
    pub fn five_rings_one_cell(directions: usize) -> Self {
        Self { rings: 5, directions, hemispheres: 1 }
    }

    /// Five log-spaced rings split into upper/lower hemisphere cells.
    pub fn five_rings_two_cells(directions: usize) -> Self {
        Self { rings: 5, directions, hemispheres: 2 }
    }

    /// Length of one per-event context: `hemispheres * R * V`.
    pub fn context_len(&self) -> usize {
        self.hemispheres * self.rings * self.directions
    }

    /// Length of the pooled window descriptor: `V * hemispheres * R * V`.
    pub fn feature_len(&self) -> usize {
        self.directions * self.context_len()
    }
}

/// Mean-pooled shape-context descriptor of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscDescriptor {
    config: RingConfig,
    values: Vec<f64>,
}

impl EscDescriptor {
    pub fn config(&self) -> RingConfig {
        self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pooled context of reference direction `v` (0-based).
    pub fn group(&self, v: usize) -> &[f64] {
        let len = self.config.context_len();
        &self.values[v * len..(v + 1) * len]
    }
}

/// Per-axis zero-mean / unit-variance copies of the window coordinates.
/// Axes with zero variance collapse to 0.
struct NormalizedWindow {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ts: Vec<f64>,
}

impl NormalizedWindow {
    fn new(w: &EventWindow) -> Self {
        let n = w.len();
        let norm_axis = |values: Vec<f64>| -> Vec<f64> {
            if n == 0 {
                return values;
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            if var <= 0.0 {
                return vec![0.0; n];
            }
            let std = var.sqrt();
            values.iter().map(|v| (v - mean) / std).collect()
        };
        Self {
            xs: norm_axis(w.events().iter().map(|e| e.x as f64).collect()),
            ys: norm_axis(w.events().iter().map(|e| e.y as f64).collect()),
            ts: norm_axis(w.events().iter().map(|e| e.t as f64).collect()),
        }
    }

    fn dist(&self, i: usize, n: usize) -> f64 {
        let dx = self.xs[n] - self.xs[i];
        let dy = self.ys[n] - self.ys[i];
        let dt = self.ts[n] - self.ts[i];
        (dx * dx + dy * dy + dt * dt).sqrt()
    }
}

/// Log-spaced ring boundaries relative to the mean neighbor distance:
/// inner radius `mean/8`, outer radius `2*mean`. Distances outside the span
/// clamp into the first/last ring.
struct RingScale {
    inner: f64,
    log_inner: f64,
    log_span: f64,
    rings: usize,
}

impl RingScale {
    fn new(mean_dist: f64, rings: usize) -> Self {
        let inner = 0.125 * mean_dist;
        let outer = 2.0 * mean_dist;
        let (log_inner, log_span) = if inner > 0.0 {
            (inner.ln(), outer.ln() - inner.ln())
        } else {
            (0.0, 0.0)
        };
        Self { inner, log_inner, log_span, rings }
    }

    fn ring_of(&self, dist: f64) -> usize {
        if self.inner <= 0.0 || self.log_span <= 0.0 || dist <= self.inner {
            return 0;
        }
        let frac = (dist.ln() - self.log_inner) / self.log_span;
        ((frac * self.rings as f64).floor() as usize).min(self.rings - 1)
    }
}

fn context_of(
    i: usize,
    norm: &NormalizedWindow,
    oriented: &[OrientedEvent],
    cfg: &RingConfig,
    weights: Option<&[f64]>,
) -> Vec<f64> {
    let n = oriented.len();
    let mut ctx = vec![0.0; cfg.context_len()];
    if n < 2 {
        return ctx;
    }
    let mean_dist =
        (0..n).filter(|&m| m != i).map(|m| norm.dist(i, m)).sum::<f64>() / (n - 1) as f64;
    let scale = RingScale::new(mean_dist, cfg.rings);
    for m in 0..n {
        if m == i || oriented[m].direction == 0 {
            continue;
        }
        let ring = scale.ring_of(norm.dist(i, m));
        let cell = if cfg.hemispheres == 2 && norm.ys[m] > norm.ys[i] { 1 } else { 0 };
        let bin = cell * cfg.rings * cfg.directions
            + ring * cfg.directions
            + (oriented[m].direction as usize - 1);
        ctx[bin] += match weights {
            Some(w) => w[m],
            None => 1.0,
        };
    }
    // normalize each ring's sub-histogram to sum 1, jointly across its
    // cells: with two hemispheres, the up/down mass split is the signal the
    // cells exist to carry and must survive normalization
    for ring in 0..cfg.rings {
        let mut sum = 0.0;
        for cell in 0..cfg.hemispheres {
            let start = cell * cfg.rings * cfg.directions + ring * cfg.directions;
            sum += ctx[start..start + cfg.directions].iter().sum::<f64>();
        }
        if sum > 0.0 {
            for cell in 0..cfg.hemispheres {
                let start = cell * cfg.rings * cfg.directions + ring * cfg.directions;
                for v in &mut ctx[start..start + cfg.directions] {
                    *v /= sum;
                }
            }
        }
    }
    ctx
}

fn check_inputs(
    w: &EventWindow,
    oriented: &[OrientedEvent],
    weights: Option<&[f64]>,
) -> Result<(), DescriptorError> {
    if oriented.len() != w.len() {
        return Err(DescriptorError::Misaligned { expected: w.len(), got: oriented.len() });
    }
    if let Some(ws) = weights {
        if ws.len() != w.len() {
            return Err(DescriptorError::Misaligned { expected: w.len(), got: ws.len() });
        }
    }
    Ok(())
}

/// Shape context of the single event at `index`.
///
/// `weights`, when given, replaces the unit increment of each neighbor by its
/// connectivity weight. Windows with fewer than two events yield all zeros.
pub fn esc_event(
    w: &EventWindow,
    index: usize,
    oriented: &[OrientedEvent],
    cfg: &RingConfig,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, DescriptorError> {
    check_inputs(w, oriented, weights)?;
    let norm = NormalizedWindow::new(w);
    Ok(context_of(index, &norm, oriented, cfg, weights))
}

/// Mean-pooled window descriptor.
///
/// Valid-direction events contribute their context to the group of their own
/// direction; each group is averaged (all-zero when no event has that
/// direction) and the groups are concatenated.
pub fn esc(
    w: &EventWindow,
    oriented: &[OrientedEvent],
    cfg: &RingConfig,
    weights: Option<&[f64]>,
) -> Result<EscDescriptor, DescriptorError> {
    check_inputs(w, oriented, weights)?;
    let norm = NormalizedWindow::new(w);
    let ctx_len = cfg.context_len();
    let mut sums = vec![0.0; cfg.feature_len()];
    let mut counts = vec![0usize; cfg.directions];
    for i in 0..oriented.len() {
        let dir = oriented[i].direction;
        if dir == 0 {
            continue;
        }
        let ctx = context_of(i, &norm, oriented, cfg, weights);
        let group = dir as usize - 1;
        counts[group] += 1;
        for (dst, src) in sums[group * ctx_len..(group + 1) * ctx_len].iter_mut().zip(&ctx) {
            *dst += src;
        }
    }
    for group in 0..cfg.directions {
        if counts[group] > 0 {
            for v in &mut sums[group * ctx_len..(group + 1) * ctx_len] {
                *v /= counts[group] as f64;
            }
        }
    }
    Ok(EscDescriptor { config: *cfg, values: sums })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Polarity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(x: u16, y: u16, t: u64) -> Event {
        Event { x, y, t, pol: Polarity::On }
    }

    fn oriented(events: &[Event], dirs: &[u8]) -> Vec<OrientedEvent> {
        events
            .iter()
            .zip(dirs)
            .map(|(e, &d)| OrientedEvent {
                event: *e,
                theta: if d == 0 { None } else { Some(0.0) },
                direction: d,
                amplitude: 0.0,
            })
            .collect()
    }

    #[test]
    fn feature_lengths() {
        assert_eq!(RingConfig::five_rings_one_cell(4).feature_len(), 80);
        assert_eq!(RingConfig::five_rings_two_cells(4).feature_len(), 160);
    }

    #[test]
    fn two_event_window_single_bin() {
        let events = vec![ev(10, 10, 0), ev(20, 20, 100)];
        let o = oriented(&events, &[1, 3]);
        let w = EventWindow::from_events(128, 128, events);
        let cfg = RingConfig::five_rings_one_cell(4);
        let ctx = esc_event(&w, 0, &o, &cfg, None).unwrap();
        let nonzero: Vec<(usize, f64)> =
            ctx.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        let (bin, value) = nonzero[0];
        assert_eq!(value, 1.0);
        assert_eq!(bin % cfg.directions, 2, "direction-3 bin");
    }

    #[test]
    fn hemispheres_split_vertical_neighbors() {
        let events = vec![ev(20, 20, 0), ev(20, 10, 10), ev(20, 30, 20)];
        let o = oriented(&events, &[1, 2, 2]);
        let w = EventWindow::from_events(128, 128, events);
        let cfg = RingConfig::five_rings_two_cells(4);
        let ctx = esc_event(&w, 0, &o, &cfg, None).unwrap();
        let half = cfg.rings * cfg.directions;
        let upper: f64 = ctx[..half].iter().sum();
        let lower: f64 = ctx[half..].iter().sum();
        assert!(upper > 0.0 && lower > 0.0, "both cells populated: {ctx:?}");
    }

    #[test]
    fn fewer_than_two_events_all_zero() {
        let events = vec![ev(5, 5, 0)];
        let o = oriented(&events, &[2]);
        let w = EventWindow::from_events(128, 128, events);
        let cfg = RingConfig::five_rings_one_cell(4);
        assert!(esc_event(&w, 0, &o, &cfg, None).unwrap().iter().all(|&v| v == 0.0));
    }

    fn random_window(rng: &mut ChaCha8Rng, n: usize) -> (EventWindow, Vec<OrientedEvent>) {
        let mut events = Vec::with_capacity(n);
        let mut dirs = Vec::with_capacity(n);
        let mut t = 0u64;
        for _ in 0..n {
            t += rng.gen_range(1..40);
            events.push(ev(rng.gen_range(0..128), rng.gen_range(0..128), t));
            dirs.push(rng.gen_range(0u8..=4));
        }
        let w = EventWindow::from_events(128, 128, events.clone());
        let o = oriented(&events, &dirs);
        (w, o)
    }

    #[test]
    fn ring_histograms_normalized_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cfg = RingConfig::five_rings_two_cells(4);
        for _ in 0..100 {
            let (w, o) = random_window(&mut rng, 40);
            for i in 0..w.len() {
                let ctx = esc_event(&w, i, &o, &cfg, None).unwrap();
                for ring in 0..cfg.rings {
                    let mut s = 0.0;
                    for cell in 0..cfg.hemispheres {
                        let start = (cell * cfg.rings + ring) * cfg.directions;
                        s += ctx[start..start + cfg.directions].iter().sum::<f64>();
                    }
                    assert!(s.abs() < 1e-9 || (s - 1.0).abs() < 1e-9, "ring sum {s}");
                }
            }
            let d = esc(&w, &o, &cfg, None).unwrap();
            assert!(d.values().iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn time_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (w, o) = random_window(&mut rng, 50);
        let cfg = RingConfig::five_rings_two_cells(4);
        let base = esc(&w, &o, &cfg, None).unwrap();
        for scale in [2u64, 10] {
            let events: Vec<Event> =
                w.events().iter().map(|e| Event { t: e.t * scale, ..*e }).collect();
            let o2: Vec<OrientedEvent> = o
                .iter()
                .zip(&events)
                .map(|(orig, e)| OrientedEvent { event: *e, ..*orig })
                .collect();
            let w2 = EventWindow::from_events(128, 128, events);
            let scaled = esc(&w2, &o2, &cfg, None).unwrap();
            for (a, b) in base.values().iter().zip(scaled.values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_cell_invariant_under_point_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (w, o) = random_window(&mut rng, 60);
        let cfg = RingConfig::five_rings_one_cell(4);
        let base = esc(&w, &o, &cfg, None).unwrap();
        // reflect positions through (63.5, 63.5); directions are mod-pi so
        // labels carry over unchanged
        let events: Vec<Event> =
            w.events().iter().map(|e| Event { x: 127 - e.x, y: 127 - e.y, ..*e }).collect();
        let o2: Vec<OrientedEvent> = o
            .iter()
            .zip(&events)
            .map(|(orig, e)| OrientedEvent { event: *e, ..*orig })
            .collect();
        let w2 = EventWindow::from_events(128, 128, events);
        let inverted = esc(&w2, &o2, &cfg, None).unwrap();
        for (a, b) in base.values().iter().zip(inverted.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn weighted_variant_changes_bin_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let (w, o) = random_window(&mut rng, 30);
        let cfg = RingConfig::five_rings_one_cell(4);
        let mut weights = vec![1.0; w.len()];
        weights[0] = 0.3;
        weights[1] = 0.3;
        let plain = esc(&w, &o, &cfg, None).unwrap();
        let weighted = esc(&w, &o, &cfg, Some(&weights)).unwrap();
        assert_ne!(plain.values(), weighted.values());
    }

    #[test]
    fn degenerate_geometry_clamps_to_first_ring() {
        // all events at one pixel, distinct times with zero time variance is
        // impossible; zero *spatial* variance still normalizes cleanly
        let events = vec![ev(7, 7, 0), ev(7, 7, 5), ev(7, 7, 10)];
        let o = oriented(&events, &[1, 1, 1]);
        let w = EventWindow::from_events(128, 128, events);
        let cfg = RingConfig::five_rings_one_cell(4);
        let d = esc(&w, &o, &cfg, None).unwrap();
        assert!(d.values().iter().any(|&v| v > 0.0));
    }
}
