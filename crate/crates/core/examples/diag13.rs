use evshape_core::dataset::SuitClass;
use evshape_core::descriptor::{esc, RingConfig};
use evshape_core::event::{frame_stream, Event, EventWindow, FramingConfig};
use evshape_core::orientation::{orient_window, OrientationConfig};
use evshape_core::synth::{suit_contour, synth_translating_contour, SyntheticScenario};

fn invert_window(w: &EventWindow) -> EventWindow {
    let (x0, x1, y0, y1) = w.spatial_bounding_box().unwrap();
    let (sx, sy) = (x0 + x1, y0 + y1);
    EventWindow::from_events(w.width(), w.height(),
        w.events().iter().map(|e| Event { x: sx - e.x, y: sy - e.y, ..*e }).collect())
}
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn main() {
    for n in [150usize, 300, 450] {
        for l in [7u16, 9, 11] {
            for m in [8usize, 16] {
                let ocfg = OrientationConfig { l, m, ..OrientationConfig::default() };
                let mut scenario = SyntheticScenario::translating_contour(
                    suit_contour(SuitClass::Spade), 60.0, 0.5, 17);
                scenario.direction = (1.0, 0.3);
                scenario.scale = 60.0;
                let stream = synth_translating_contour(&scenario).unwrap();
                let windows = frame_stream(&stream, FramingConfig { n, b: n / 3 });
                if windows.len() < 6 { continue; }
                let two = RingConfig::five_rings_two_cells(4);
                let mut inv = Vec::new();
                let mut intra = Vec::new();
                let mut prev: Option<Vec<f64>> = None;
                let mut valid = 0usize; let mut total = 0usize;
                for w in windows.iter().take(8) {
                    let o = orient_window(w, &ocfg);
                    valid += o.iter().filter(|e| e.direction > 0).count();
                    total += o.len();
                    let wi = invert_window(w);
                    let oi = orient_window(&wi, &ocfg);
                    let d2 = esc(w, &o, &two, None).unwrap().into_values();
                    let d2i = esc(&wi, &oi, &two, None).unwrap().into_values();
                    inv.push(euclid(&d2, &d2i));
                    if let Some(p) = prev.replace(d2.clone()) { intra.push(euclid(&d2, &p)); }
                }
                let mi = inv.iter().sum::<f64>() / inv.len() as f64;
                let mt = intra.iter().sum::<f64>() / intra.len() as f64;
                println!("N={n} L={l} M={m}: valid={:.0}% inv={mi:.3} intra={mt:.3} ratio={:.1}",
                    100.0 * valid as f64 / total as f64, mi / mt);
            }
        }
    }
}
