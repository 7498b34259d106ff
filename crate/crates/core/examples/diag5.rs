use evshape_core::classify::kmeans;
use evshape_core::dataset::SuitClass;
use evshape_core::descriptor::RingConfig;
use evshape_core::event::FramingConfig;
use evshape_core::orientation::OrientationConfig;
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, suit_contour, synth_translating_contour, CorpusParams, SyntheticScenario};

fn render(class: SuitClass) {
    let mut scenario = SyntheticScenario::translating_contour(suit_contour(class), 400.0, 0.05, 1);
    scenario.direction = (1.0, 0.0);
    scenario.scale = 50.0;
    let stream = synth_translating_contour(&scenario).unwrap();
    let mut grid = vec![[b' '; 64]; 32];
    for e in stream.events() {
        grid[(e.y / 4).min(31) as usize][(e.x / 2).min(63) as usize] = b'#';
    }
    println!("=== {class:?} ({} events)", stream.len());
    for row in &grid {
        let s = String::from_utf8_lossy(row);
        if !s.trim().is_empty() { println!("{}", s.trim_end()); }
    }
}

fn main() {
    for c in SuitClass::ALL { render(c); }

    for (scale, l, dur) in [(52.0f64, 11u16, 0.7f64), (56.0, 11, 0.6), (48.0, 11, 0.8), (52.0, 9, 0.7)] {
        for kind in [DescriptorKind::Hoe, DescriptorKind::HoeElbpPol] {
            let ocfg = OrientationConfig { l, m: 8, ..OrientationConfig::default() };
            let params = CorpusParams { seed: 7, streams_per_class: 2, speed: 60.0,
                scale, duration: dur, noise_fraction: 0.05 };
            let corpus = build_suit_corpus(&params).unwrap();
            let features = FeatureConfig {
                framing: FramingConfig { n: 150, b: 50 },
                orientation: ocfg,
                descriptor: kind,
                ring: RingConfig::five_rings_one_cell(4),
            };
            let mut vectors = Vec::new();
            let mut truth = Vec::new();
            for (i, (s, c)) in corpus.iter().enumerate() {
                for r in extract_stream(s, &features, "x", i).unwrap() {
                    vectors.push(r.vector); truth.push(c.index());
                }
            }
            let km = kmeans(&vectors, 4, 7).unwrap();
            let mut counts = vec![[0usize; 4]; 4];
            for (l2, t) in km.labels.iter().zip(&truth) { counts[*l2][*t] += 1; }
            let purity: usize = counts.iter().map(|c| c.iter().max().unwrap()).sum();
            println!("scale={scale} L={l} dur={dur} {kind:?}: purity={:.3} ({} windows)",
                purity as f64 / truth.len() as f64, truth.len());
        }
    }
}
