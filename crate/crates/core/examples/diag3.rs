use evshape_core::classify::kmeans;
use evshape_core::dataset::SuitClass;
use evshape_core::descriptor::{esc, RingConfig};
use evshape_core::event::{frame_stream, FramingConfig};
use evshape_core::orientation::{orient_window, OrientationConfig};
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, suit_contour, synth_translating_contour, CorpusParams, SyntheticScenario};

fn main() {
    for scale in [20.0f64, 28.0, 38.0] {
        for l in [5u16, 7, 9] {
            for m in [8usize, 12] {
                let ocfg = OrientationConfig { l, m, ..OrientationConfig::default() };
                // validity on spade
                let mut scenario = SyntheticScenario::translating_contour(
                    suit_contour(SuitClass::Spade), 60.0, 1.0, 17);
                scenario.direction = (1.0, 0.3);
                scenario.scale = scale;
                let stream = synth_translating_contour(&scenario).unwrap();
                let windows = frame_stream(&stream, FramingConfig { n: 150, b: 50 });
                if windows.len() < 10 { println!("scale={scale} L={l} M={m}: too few windows"); continue; }
                let mut valid = 0usize; let mut total = 0usize;
                let two = RingConfig::five_rings_two_cells(4);
                let mut descs = Vec::new();
                for w in windows.iter().take(10) {
                    let o = orient_window(w, &ocfg);
                    valid += o.iter().filter(|e| e.direction > 0).count();
                    total += o.len();
                    descs.push(esc(w, &o, &two, None).unwrap().into_values());
                }
                let mut intra = 0.0;
                for i in 1..descs.len() {
                    intra += descs[i].iter().zip(&descs[i-1]).map(|(a,b)| (a-b)*(a-b)).sum::<f64>().sqrt();
                }
                intra /= (descs.len() - 1) as f64;

                // kmeans purity on 4-class corpus (1 stream each, short)
                let params = CorpusParams { seed: 7, streams_per_class: 1, speed: 60.0,
                    scale, duration: 0.8, noise_fraction: 0.05 };
                let corpus = build_suit_corpus(&params).unwrap();
                let features = FeatureConfig {
                    framing: FramingConfig { n: 150, b: 50 },
                    orientation: ocfg,
                    descriptor: DescriptorKind::Hoe,
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
                println!("scale={scale} L={l} M={m}: valid={:.0}% intra_esc={intra:.2} purity={:.3} ({} windows)",
                    100.0 * valid as f64 / total as f64,
                    purity as f64 / truth.len() as f64, truth.len());
            }
        }
    }
}
