use evshape_core::dataset::SuitClass;
use evshape_core::event::{frame_stream, FramingConfig};
use evshape_core::orientation::{fit_plane, OrientationConfig};
use evshape_core::synth::{suit_contour, synth_translating_contour, SyntheticScenario};

fn main() {
    let cfg = OrientationConfig::default();
    let mut scenario =
        SyntheticScenario::translating_contour(suit_contour(SuitClass::Spade), 60.0, 1.2, 17);
    scenario.direction = (1.0, 0.3);
    scenario.scale = 38.0;
    let stream = synth_translating_contour(&scenario).unwrap();
    let windows = frame_stream(&stream, FramingConfig { n: 150, b: 50 });
    let mut too_few = 0usize;
    let mut cond_reject = 0usize;
    let mut ok = 0usize;
    let mut neighbor_counts = [0usize; 9];
    let half = (cfg.l / 2) as i32;
    for w in windows.iter().take(30) {
        let events = w.events();
        for (n, e) in events.iter().enumerate() {
            let mut upper = n;
            while upper < events.len() && events[upper].t <= e.t { upper += 1; }
            let mut neigh = Vec::new();
            for m in (0..upper).rev() {
                if m == n { continue; }
                let q = &events[m];
                if (q.x as i32 - e.x as i32).abs() <= half && (q.y as i32 - e.y as i32).abs() <= half {
                    neigh.push(*q);
                    if neigh.len() == cfg.m { break; }
                }
            }
            neighbor_counts[neigh.len().min(8)] += 1;
            if neigh.len() < cfg.min_neighbors { too_few += 1; }
            else if fit_plane(e, &neigh, &cfg).is_none() { cond_reject += 1; }
            else { ok += 1; }
        }
    }
    println!("ok={ok} too_few={too_few} cond_reject={cond_reject}");
    println!("neighbor count histogram 0..8: {neighbor_counts:?}");
    // window duration
    println!("window duration_us: {:?}", windows.iter().take(5).map(|w| w.duration_us()).collect::<Vec<_>>());
    println!("events/sec = {}", stream.len() as f64 / 1.2);
}
