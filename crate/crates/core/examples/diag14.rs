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

fn stream_with_noise(noise_seed: u64, frac: f64) -> evshape_core::event::EventStream {
    let mut sc = SyntheticScenario::translating_contour(
        suit_contour(SuitClass::Spade), 60.0, 0.5, noise_seed);
    sc.direction = (1.0, 0.3);
    sc.scale = 60.0;
    let clean_len = {
        let mut c = sc.clone(); c.noise_rate = 0.0;
        synth_translating_contour(&c).unwrap().len()
    };
    sc.noise_rate = frac * clean_len as f64 / sc.duration;
    synth_translating_contour(&sc).unwrap()
}

fn main() {
    for n in [150usize, 300] {
        for l in [9u16, 11] {
            let ocfg = OrientationConfig { l, ..OrientationConfig::default() };
            let two = RingConfig::five_rings_two_cells(4);
            let a = stream_with_noise(17, 0.05);
            let b = stream_with_noise(18, 0.05);
            let wa = frame_stream(&a, FramingConfig { n, b: n / 3 });
            let wb = frame_stream(&b, FramingConfig { n, b: n / 3 });
            let mut noise_floor = Vec::new();
            let mut inv_dist = Vec::new();
            for (w1, w2) in wa.iter().zip(wb.iter()).take(8) {
                let o1 = orient_window(w1, &ocfg);
                let o2 = orient_window(w2, &ocfg);
                let d1 = esc(w1, &o1, &two, None).unwrap().into_values();
                let d2 = esc(w2, &o2, &two, None).unwrap().into_values();
                noise_floor.push(euclid(&d1, &d2));
                let wi = invert_window(w1);
                let oi = orient_window(&wi, &ocfg);
                let di = esc(&wi, &oi, &two, None).unwrap().into_values();
                inv_dist.push(euclid(&d1, &di));
            }
            let nf = noise_floor.iter().sum::<f64>() / noise_floor.len() as f64;
            let iv = inv_dist.iter().sum::<f64>() / inv_dist.len() as f64;
            println!("N={n} L={l}: noise_floor={nf:.3} inversion={iv:.3} ratio={:.1}", iv / nf);
        }
    }
}
