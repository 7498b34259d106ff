use evshape_core::dataset::SuitClass;
use evshape_core::descriptor::{esc, hoe, RingConfig};
use evshape_core::event::{frame_stream, FramingConfig};
use evshape_core::orientation::{orient_window, OrientationConfig};
use evshape_core::synth::{suit_contour, synth_translating_contour, SyntheticScenario};

fn main() {
    let ocfg = OrientationConfig::default();
    for class in SuitClass::ALL {
        let mut scenario =
            SyntheticScenario::translating_contour(suit_contour(class), 60.0, 1.2, 17);
        scenario.direction = (1.0, 0.3);
        scenario.scale = 38.0;
        let stream = synth_translating_contour(&scenario).unwrap();
        let windows = frame_stream(&stream, FramingConfig { n: 150, b: 50 });
        let mut valid = 0usize;
        let mut total = 0usize;
        let mut dir_hist = [0usize; 5];
        let mut mean_hoe = vec![0.0; 16];
        for w in windows.iter().take(20) {
            let o = orient_window(w, &ocfg);
            for e in &o {
                total += 1;
                if e.direction > 0 { valid += 1; }
                dir_hist[e.direction as usize] += 1;
            }
            let h = hoe(w, &o, 4).unwrap();
            for (m, v) in mean_hoe.iter_mut().zip(h.values()) { *m += v / 20.0; }
        }
        println!("{class:?}: events={} windows={} valid={:.2}% dirs={:?}",
            stream.len(), windows.len(), 100.0 * valid as f64 / total as f64, dir_hist);
        println!("  mean hoe: {:?}", mean_hoe.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    }

    // esc intra vs inversion on spade
    let mut scenario =
        SyntheticScenario::translating_contour(suit_contour(SuitClass::Spade), 60.0, 0.9, 17);
    scenario.direction = (1.0, 0.3);
    let stream = synth_translating_contour(&scenario).unwrap();
    let windows = frame_stream(&stream, FramingConfig { n: 150, b: 50 });
    let two = RingConfig::five_rings_two_cells(4);
    let mut descs = Vec::new();
    for w in windows.iter().take(8) {
        let o = orient_window(w, &ocfg);
        descs.push(esc(w, &o, &two, None).unwrap().into_values());
    }
    for i in 1..descs.len() {
        let d: f64 = descs[i].iter().zip(&descs[i-1]).map(|(a,b)| (a-b)*(a-b)).sum::<f64>().sqrt();
        println!("intra dist {i}: {d:.3}");
    }
    let ctx_len = two.context_len();
    for g in 0..4 {
        let s: f64 = descs[0][g*ctx_len..(g+1)*ctx_len].iter().sum();
        println!("group {g} mass: {s:.3}");
    }
}
