use evshape_core::dataset::SuitClass;
use evshape_core::descriptor::{esc, RingConfig};
use evshape_core::event::{frame_stream, FramingConfig};
use evshape_core::orientation::{orient_window, OrientationConfig};
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, suit_contour, synth_translating_contour, CorpusParams, SyntheticScenario};
use evshape_core::event::{Event, EventWindow};

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
    // full criterion-8 path
    let cfg = PipelineConfig {
        features: FeatureConfig {
            framing: FramingConfig { n: 150, b: 50 },
            orientation: OrientationConfig { l: 9, ..OrientationConfig::default() },
            descriptor: DescriptorKind::HoeElbpPol,
            ring: RingConfig::five_rings_one_cell(4),
        },
        classifier: ClassifierKind::Ggm,
        alpha: 0.75, seed: 7, svm_c: 1.0, svm_gamma: None,
    };
    let params = CorpusParams { seed: 7, streams_per_class: 2, speed: 60.0,
        scale: 52.0, duration: 0.7, noise_fraction: 0.05 };
    let corpus = build_suit_corpus(&params).unwrap();
    let mut records = Vec::new();
    for (i, (s, c)) in corpus.iter().enumerate() {
        records.extend(extract_stream(s, &cfg.features, c.name(), i).unwrap());
    }
    let samples = group_by_sample(&records);
    let t0 = std::time::Instant::now();
    let outcome = ggm_train_eval(&samples, 4, &cfg).unwrap();
    println!("criterion8: purity={:?} wa={:?} balanced={:?} windows={} elapsed={:?}",
        outcome.purity, outcome.report.wa_percent, outcome.report.balanced_percent,
        outcome.report.n_windows, t0.elapsed());
    let sweep = ggm_alpha_sweep(&samples, &outcome, &[1.0, 0.75, 0.5, 0.25, 0.0]);
    println!("alpha sweep: {sweep:?}");

    // criterion-4 path with smooth spade
    for l in [9u16, 11] {
        let ocfg = OrientationConfig { l, ..OrientationConfig::default() };
        let mut scenario = SyntheticScenario::translating_contour(
            suit_contour(SuitClass::Spade), 60.0, 0.9, 17);
        scenario.direction = (1.0, 0.3);
        scenario.scale = 52.0;
        let stream = synth_translating_contour(&scenario).unwrap();
        let windows = frame_stream(&stream, FramingConfig { n: 150, b: 50 });
        let one = RingConfig::five_rings_one_cell(4);
        let two = RingConfig::five_rings_two_cells(4);
        let mut inv2 = Vec::new(); let mut intra2 = Vec::new();
        let mut inv1_max: f64 = 0.0;
        let mut prev: Option<Vec<f64>> = None;
        for w in windows.iter().take(8) {
            let o = orient_window(w, &ocfg);
            let wi = invert_window(w);
            let oi = orient_window(&wi, &ocfg);
            let d1 = esc(w, &o, &one, None).unwrap().into_values();
            let d1i = esc(&wi, &oi, &one, None).unwrap().into_values();
            inv1_max = inv1_max.max(d1.iter().zip(&d1i).map(|(a,b)| (a-b).abs()).fold(0.0f64, f64::max));
            let d2 = esc(w, &o, &two, None).unwrap().into_values();
            let d2i = esc(&wi, &oi, &two, None).unwrap().into_values();
            inv2.push(euclid(&d2, &d2i));
            if let Some(p) = prev.replace(d2.clone()) { intra2.push(euclid(&d2, &p)); }
        }
        let mi = inv2.iter().sum::<f64>() / inv2.len() as f64;
        let mt = intra2.iter().sum::<f64>() / intra2.len() as f64;
        println!("L={l}: 5RC1 max inversion drift={inv1_max:.2e}; 5RC2 inv={mi:.3} intra={mt:.3} ratio={:.1}", mi/mt);
    }
}
