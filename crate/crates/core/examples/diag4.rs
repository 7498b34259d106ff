use evshape_core::classify::kmeans;
use evshape_core::descriptor::RingConfig;
use evshape_core::event::FramingConfig;
use evshape_core::orientation::OrientationConfig;
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, CorpusParams};

fn main() {
    for scale in [38.0f64, 48.0, 56.0] {
        for l in [9u16, 11] {
            for kind in [DescriptorKind::Hoe, DescriptorKind::HoeElbpPol] {
                let ocfg = OrientationConfig { l, m: 8, ..OrientationConfig::default() };
                let params = CorpusParams { seed: 7, streams_per_class: 2, speed: 60.0,
                    scale, duration: 1.0, noise_fraction: 0.05 };
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
                println!("scale={scale} L={l} {kind:?}: purity={:.3} ({} windows) counts={counts:?}",
                    purity as f64 / truth.len() as f64, truth.len());
            }
        }
    }
}
