//! Per-event direction labels from local spatio-temporal plane fits.
//!
//! For each event, a plane `t = a*x + b*y + c` is least-squares fitted over
//! the event and up to `M` of its most recent predecessors inside an `L x L`
//! pixel box. The gradient `(a, b)` gives an orientation which is folded to a
//! direction (mod pi) and quantized into `V` bins. Bounding the vicinity by
//! event count rather than elapsed time keeps the labels independent of
//! object speed.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::event::{Event, EventWindow};

/// Plane-fit and quantization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationConfig {
    /// Side of the square spatial neighborhood in pixels (odd).
    pub l: u16,
    /// Maximum number of neighbor events used per fit.
    pub m: usize,
    /// Number of direction bins over [0, pi).
    pub v: usize,
    /// Minimum neighbor count for a valid fit.
    pub min_neighbors: usize,
    /// Reject fits whose normal-matrix condition number exceeds this.
    pub condition_threshold: f64,
}

impl Default for OrientationConfig {
    fn default() -> Self {
        Self { l: 5, m: 8, v: 4, min_neighbors: 3, condition_threshold: 1e8 }
    }
}

impl OrientationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.l < 3 || self.l % 2 == 0 {
            return Err(format!("L must be odd and >= 3, got {}", self.l));
        }
        if self.min_neighbors < 3 {
            return Err(format!("min_neighbors must be >= 3, got {}", self.min_neighbors));
        }
        if self.m < self.min_neighbors {
            return Err(format!("M ({}) must be >= min_neighbors ({})", self.m, self.min_neighbors));
        }
        if self.v < 2 {
            return Err(format!("V must be >= 2, got {}", self.v));
        }
        Ok(())
    }
}

/// An event together with its fitted orientation.
///
/// `direction` is 0 exactly when the fit was invalid (`theta` is `None`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedEvent {
    pub event: Event,
    /// Orientation of the plane gradient in [0, 2*pi), when valid.
    pub theta: Option<f64>,
    /// Quantized direction in 1..=V, or 0 when invalid.
    pub direction: u8,
    /// Gradient magnitude sqrt(a^2 + b^2) in microseconds per pixel
    /// (0 when invalid). Exposed for diagnostics; no descriptor consumes it.
    pub amplitude: f64,
}

/// Least-squares plane fit over the event and its neighbors.
///
/// Returns `(theta, amplitude)` with `theta` in [0, 2*pi), or `None` when
/// there are fewer than `min_neighbors` neighbors or the spatial support is
/// (near-)degenerate.
pub fn fit_plane(
    e: &Event,
    neighbors: &[Event],
    cfg: &OrientationConfig,
) -> Option<(f64, f64)> {
    if neighbors.len() < cfg.min_neighbors {
        return None;
    }
    // Normal equations for t = a*x + b*y + c, with coordinates centered on
    // the reference event so microsecond magnitudes stay small.
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxt = 0.0;
    let mut syt = 0.0;
    let mut st = 0.0;
    let mut count = 0.0;
    for p in std::iter::once(e).chain(neighbors) {
        let dx = p.x as f64 - e.x as f64;
        let dy = p.y as f64 - e.y as f64;
        let dt = p.t as f64 - e.t as f64;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sx += dx;
        sy += dy;
        sxt += dx * dt;
        syt += dy * dt;
        st += dt;
        count += 1.0;
    }
    let a = Matrix3::new(sxx, sxy, sx, sxy, syy, sy, sx, sy, count);
    let rhs = Vector3::new(sxt, syt, st);

    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if sigma_min <= 0.0 || sigma_max / sigma_min > cfg.condition_threshold {
        return None;
    }
    let sol = svd.solve(&rhs, 0.0).ok()?;
    let (ca, cb) = (sol[0], sol[1]);
    let amplitude = (ca * ca + cb * cb).sqrt();
    let mut theta = cb.atan2(ca);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    if theta >= 2.0 * PI {
        theta = 0.0;
    }
    Some((theta, amplitude))
}

/// Quantizes an orientation into a direction bin 1..=V.
///
/// The orientation is folded mod pi; bins are centered at `k*pi/V` with
/// round-half-up at boundaries, and the top edge wraps to bin 1.
pub fn quantize_direction(theta: f64, v: usize) -> u8 {
    let phi = theta.rem_euclid(PI);
    let bin = (phi / (PI / v as f64)).round() as usize % v;
    bin as u8 + 1
}

/// Fits and quantizes every event of a window, using only events inside the
/// window as neighbor candidates.
///
/// Neighbors of event `n` are the events within the `L x L` box whose
/// timestamp is at or before `t(e_n)`, most recent first (ties by stream
/// position), at most `M` of them.
pub fn orient_window(w: &EventWindow, cfg: &OrientationConfig) -> Vec<OrientedEvent> {
    let events = w.events();
    let half = (cfg.l / 2) as i32;
    let mut out = Vec::with_capacity(events.len());
    let mut neighbors: Vec<Event> = Vec::with_capacity(cfg.m);
    for (n, e) in events.iter().enumerate() {
        neighbors.clear();
        // window timestamps are non-decreasing, so everything before this
        // index is eligible, plus the same-timestamp run after it
        let mut upper = n;
        while upper < events.len() && events[upper].t <= e.t {
            upper += 1;
        }
        for m in (0..upper).rev() {
            if m == n {
                continue;
            }
            let q = &events[m];
            if (q.x as i32 - e.x as i32).abs() <= half && (q.y as i32 - e.y as i32).abs() <= half {
                neighbors.push(*q);
                if neighbors.len() == cfg.m {
                    break;
                }
            }
        }
        let oriented = match fit_plane(e, &neighbors, cfg) {
            Some((theta, amplitude)) => OrientedEvent {
                event: *e,
                theta: Some(theta),
                direction: quantize_direction(theta, cfg.v),
                amplitude,
            },
            None => OrientedEvent { event: *e, theta: None, direction: 0, amplitude: 0.0 },
        };
        out.push(oriented);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Polarity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(x: u16, y: u16, t: u64) -> Event {
        Event { x, y, t, pol: Polarity::On }
    }

    /// Events sampled from t = a*x + b*y + c on a small grid.
    fn plane_events(a: f64, b: f64, c: f64, n: usize) -> Vec<Event> {
        let mut events = Vec::new();
        for i in 0..n {
            let x = 10 + (i % 3) as u16;
            let y = 10 + (i / 3) as u16;
            let t = a * x as f64 + b * y as f64 + c;
            events.push(ev(x, y, t.round() as u64));
        }
        events
    }

    #[test]
    fn recovers_axis_aligned_plane() {
        // vertical edge sweeping in +x at 0.1 px/us: t = 10*x
        let events = plane_events(10.0, 0.0, 0.0, 9);
        let cfg = OrientationConfig::default();
        let (theta, amplitude) = fit_plane(&events[8], &events[..8].to_vec(), &cfg).unwrap();
        assert!((amplitude - 10.0).abs() < 1e-9 * 10.0);
        assert!(theta.abs() < 1e-9 || (theta - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn recovers_diagonal_plane() {
        let events = plane_events(5.0, 5.0, 100.0, 9);
        let cfg = OrientationConfig::default();
        let (theta, _) = fit_plane(&events[0], &events[1..].to_vec(), &cfg).unwrap();
        assert!((theta - PI / 4.0).abs() < 1e-9);
    }

    #[test]
    fn plane_coefficients_to_relative_error_1e9() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = OrientationConfig::default();
        for _ in 0..50 {
            let a: f64 = rng.gen_range(-40.0..40.0);
            let b: f64 = rng.gen_range(-40.0..40.0);
            if a.abs() + b.abs() < 1.0 {
                continue;
            }
            // exact integer timestamps: round the plane onto integer coords
            let a = a.round();
            let b = b.round();
            let mut events = Vec::new();
            for i in 0..9 {
                let x = 20 + (i % 3) as u16;
                let y = 20 + (i / 3) as u16;
                let t = a * x as f64 + b * y as f64 + 4000.0;
                if t < 0.0 {
                    continue;
                }
                events.push(ev(x, y, t as u64));
            }
            if events.len() < 5 {
                continue;
            }
            let (theta, amplitude) =
                fit_plane(&events[0], &events[1..].to_vec(), &cfg).unwrap();
            let truth = b.atan2(a).rem_euclid(2.0 * PI);
            let diff = (theta - truth).abs();
            let diff = diff.min((diff - 2.0 * PI).abs());
            assert!(diff < 1e-9, "a={a} b={b} theta={theta} truth={truth}");
            let amp_truth = (a * a + b * b).sqrt();
            assert!((amplitude - amp_truth).abs() <= 1e-9 * amp_truth);
        }
    }

    #[test]
    fn degenerate_supports_are_invalid() {
        let cfg = OrientationConfig::default();
        // all events share one spatial point
        let stacked: Vec<Event> = (0..6).map(|i| ev(5, 5, i * 10)).collect();
        assert!(fit_plane(&stacked[5], &stacked[..5].to_vec(), &cfg).is_none());
        // collinear spatial support
        let collinear: Vec<Event> = (0..6).map(|i| ev(5 + i as u16, 5, i as u64 * 10)).collect();
        assert!(fit_plane(&collinear[5], &collinear[..5].to_vec(), &cfg).is_none());
        // too few neighbors
        let few = plane_events(3.0, 0.0, 0.0, 3);
        assert!(fit_plane(&few[2], &few[..2].to_vec(), &cfg).is_none());
    }

    #[test]
    fn quantize_bins_and_ties() {
        assert_eq!(quantize_direction(0.0, 4), 1);
        assert_eq!(quantize_direction(PI / 2.0, 4), 3);
        assert_eq!(quantize_direction(PI / 4.0, 4), 2);
        assert_eq!(quantize_direction(3.0 * PI / 4.0, 4), 4);
        // boundary at pi/8 rounds half-up into bin 2
        assert_eq!(quantize_direction(9.0 * PI / 8.0, 4), 2);
        // just under pi wraps to bin 1
        assert_eq!(quantize_direction(PI - 1e-9, 4), 1);
    }

    #[test]
    fn directions_are_mod_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let theta: f64 = rng.gen_range(0.0..PI);
            assert_eq!(quantize_direction(theta, 4), quantize_direction(theta + PI, 4));
        }
    }

    #[test]
    fn single_event_window_is_invalid() {
        let w = EventWindow::from_events(128, 128, vec![ev(10, 10, 0)]);
        let oriented = orient_window(&w, &OrientationConfig::default());
        assert_eq!(oriented.len(), 1);
        assert_eq!(oriented[0].direction, 0);
        assert!(oriented[0].theta.is_none());
    }

    #[test]
    fn window_labels_time_scale_invariant() {
        let events = plane_events(12.0, 7.0, 50.0, 9);
        let w = EventWindow::from_events(128, 128, events.clone());
        let cfg = OrientationConfig::default();
        let base: Vec<u8> = orient_window(&w, &cfg).iter().map(|o| o.direction).collect();
        assert!(base.iter().any(|&d| d != 0));
        for scale in [2u64, 10] {
            let scaled: Vec<Event> =
                events.iter().map(|e| Event { t: e.t * scale, ..*e }).collect();
            let w2 = EventWindow::from_events(128, 128, scaled);
            let got: Vec<u8> = orient_window(&w2, &cfg).iter().map(|o| o.direction).collect();
            assert_eq!(got, base, "scale {scale}");
        }
    }

    #[test]
    fn window_labels_invariant_under_point_reflection() {
        let events = plane_events(9.0, -4.0, 4000.0, 9);
        let cfg = OrientationConfig::default();
        let w = EventWindow::from_events(128, 128, events.clone());
        let base = orient_window(&w, &cfg);
        // reflect through (40, 40): x -> 80 - x, y -> 80 - y
        let reflected: Vec<Event> = events
            .iter()
            .map(|e| Event { x: 80 - e.x, y: 80 - e.y, ..*e })
            .collect();
        let w2 = EventWindow::from_events(128, 128, reflected);
        let got = orient_window(&w2, &cfg);
        for (a, b) in base.iter().zip(&got) {
            assert_eq!(a.direction, b.direction);
            if let (Some(ta), Some(tb)) = (a.theta, b.theta) {
                let d = (ta - tb).abs().rem_euclid(2.0 * PI);
                assert!((d - PI).abs() < 1e-9, "theta shifts by pi");
            }
        }
    }

    #[test]
    fn angular_error_shrinks_with_more_neighbors() {
        // Gaussian timestamp noise; mean angular error must not grow with M.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma = 8.0;
        let (a, b) = (25.0f64, 10.0f64);
        let truth = b.atan2(a);
        let mut mean_err = Vec::new();
        for m in [4usize, 8, 16] {
            let cfg = OrientationConfig { m, l: 9, ..OrientationConfig::default() };
            let mut total = 0.0;
            let mut count = 0;
            for _ in 0..400 {
                let mut neighbors = Vec::new();
                for _ in 0..m {
                    let x = rng.gen_range(20u16..29);
                    let y = rng.gen_range(20u16..29);
                    let noise: f64 = {
                        // Box-Muller
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                    };
                    let t = a * x as f64 + b * y as f64 + 5000.0 + sigma * noise;
                    neighbors.push(ev(x, y, t.max(0.0) as u64));
                }
                let e = ev(24, 24, (a * 24.0 + b * 24.0 + 5000.0) as u64);
                if let Some((theta, _)) = fit_plane(&e, &neighbors, &cfg) {
                    let mut d = (theta - truth).abs();
                    if d > PI {
                        d = 2.0 * PI - d;
                    }
                    total += d;
                    count += 1;
                }
            }
            mean_err.push(total / count as f64);
        }
        assert!(mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2], "{mean_err:?}");
    }
}
