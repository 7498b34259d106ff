use evshape_core::classify::{ggm::GgmModel, kmeans};
use evshape_core::descriptor::RingConfig;
use evshape_core::event::FramingConfig;
use evshape_core::orientation::OrientationConfig;
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, CorpusParams};

fn main() {
    let cfg = FeatureConfig {
        framing: FramingConfig { n: 150, b: 50 },
        orientation: OrientationConfig { l: 9, ..OrientationConfig::default() },
        descriptor: DescriptorKind::HoeElbpPol,
        ring: RingConfig::five_rings_one_cell(4),
    };
    let params = CorpusParams { seed: 7, streams_per_class: 2, speed: 60.0,
        scale: 52.0, duration: 0.7, noise_fraction: 0.05 };
    let corpus = build_suit_corpus(&params).unwrap();
    let mut vectors = Vec::new();
    for (i, (s, _)) in corpus.iter().enumerate() {
        for r in extract_stream(s, &cfg, "x", i).unwrap() { vectors.push(r.vector); }
    }
    let km = kmeans(&vectors, 4, 7).unwrap();
    let model = GgmModel::fit(&vectors, &km.labels, 4, 4).unwrap();
    for (k, class) in model.classes.iter().enumerate() {
        println!("cluster {k}: size={} cov diag={:?}", class.size,
            (0..4).map(|i| format!("{:.2e}", class.covariance[i][i])).collect::<Vec<_>>());
    }
    // score stats: count underflows
    let mut zeros = 0usize;
    let mut member_q = Vec::new();
    for (v, &l) in vectors.iter().zip(&km.labels) {
        let scores = model.score(v);
        if scores.iter().all(|&s| s == 0.0) { zeros += 1; }
        // recompute q for own cluster
        let s_own = scores[l];
        member_q.push(if s_own > 0.0 { -s_own.ln() } else { f64::INFINITY });
    }
    member_q.sort_by(|a, b| a.total_cmp(b));
    println!("windows with all-zero scores: {zeros} / {}", vectors.len());
    println!("member q quartiles: {:.1} {:.1} {:.1} max {:.1}",
        member_q[member_q.len()/4], member_q[member_q.len()/2],
        member_q[3*member_q.len()/4], member_q[member_q.len()-1]);
}
