use evshape_core::classify::{classify_with_memory, kmeans};
use evshape_core::descriptor::RingConfig;
use evshape_core::event::FramingConfig;
use evshape_core::orientation::OrientationConfig;
use evshape_core::pipeline::*;
use evshape_core::synth::{build_suit_corpus, CorpusParams};
use nalgebra::{Matrix4, Vector4};

fn dvec(x: &[f64], mean: &[f64]) -> Vector4<f64> {
    Vector4::from_fn(|j, _| {
        x[j*4..(j+1)*4].iter().zip(&mean[j*4..(j+1)*4]).map(|(a,b)| (a-b)*(a-b)).sum()
    })
}

fn run(jitter: f64, dur: f64, alpha: f64, report: bool) -> f64 {
    let cfg = FeatureConfig {
        framing: FramingConfig { n: 150, b: 50 },
        orientation: OrientationConfig { l: 9, ..OrientationConfig::default() },
        descriptor: DescriptorKind::HoeElbpPol,
        ring: RingConfig::five_rings_one_cell(4),
    };
    // corpus with controllable jitter: rebuild manually
    use evshape_core::dataset::SuitClass;
    use evshape_core::synth::{suit_contour, synth_translating_contour, SyntheticScenario};
    let mut vectors = Vec::new();
    let mut truth = Vec::new();
    let mut sample_of = Vec::new();
    let mut sid = 0usize;
    for class in SuitClass::ALL {
        for rep in 0..2 {
            let seed = 7u64.wrapping_mul(0x100_0003).wrapping_add((class.index()*97 + rep) as u64);
            let mut sc = SyntheticScenario::translating_contour(suit_contour(class), 60.0, dur, seed);
            sc.scale = 52.0;
            sc.direction = (1.0, 0.3 + jitter * rep as f64);
            let clean = synth_translating_contour(&sc).unwrap();
            sc.noise_rate = 0.05 * clean.len() as f64 / dur;
            let stream = synth_translating_contour(&sc).unwrap();
            for r in extract_stream(&stream, &cfg, "x", sid).unwrap() {
                vectors.push(r.vector); truth.push(class.index()); sample_of.push(sid);
            }
            sid += 1;
        }
    }
    let km = kmeans(&vectors, 4, 7).unwrap();
    let mut means = vec![vec![0.0; 16]; 4];
    let mut sizes = vec![0usize; 4];
    for (v, &l) in vectors.iter().zip(&km.labels) {
        sizes[l] += 1;
        for (m, x) in means[l].iter_mut().zip(v) { *m += x; }
    }
    for k in 0..4 {
        for m in &mut means[k] { *m /= sizes[k] as f64; }
        for j in 0..4 {
            let s: f64 = means[k][j*4..(j+1)*4].iter().sum();
            if s > 0.0 { for m in &mut means[k][j*4..(j+1)*4] { *m /= s; } }
        }
    }
    let mut inv = Vec::new();
    for k in 0..4 {
        let mut m2 = Matrix4::zeros();
        for (v, &l) in vectors.iter().zip(&km.labels) {
            if l != k { continue; }
            let d = dvec(v, &means[k]);
            m2 += d * d.transpose();
        }
        m2 /= sizes[k] as f64;
        let eps = (1e-8 * m2.trace() / 4.0).max(1e-12);
        for i in 0..4 { m2[(i,i)] += eps; }
        inv.push(m2.try_inverse().unwrap());
    }
    let mut counts = vec![[0usize;4];4];
    for (l, t) in km.labels.iter().zip(&truth) { counts[*l][*t] += 1; }
    let name: Vec<usize> = (0..4).map(|k| counts[k].iter().enumerate().max_by_key(|(_,c)| **c).unwrap().0).collect();
    let n_samples = sid;
    let mut hits = 0usize; let mut total = 0usize;
    let mut per_class = vec![[0usize; 2]; 4];
    for s in 0..n_samples {
        let idx: Vec<usize> = (0..vectors.len()).filter(|&i| sample_of[i] == s).collect();
        let scores: Vec<Vec<f64>> = idx.iter().map(|&i| {
            (0..4).map(|k| {
                let d = dvec(&vectors[i], &means[k]);
                (-(d.transpose() * inv[k] * d)[(0,0)]).exp()
            }).collect()
        }).collect();
        let decided = classify_with_memory(&scores, alpha);
        for (j, &c) in decided.iter().enumerate() {
            total += 1;
            per_class[truth[idx[j]]][1] += 1;
            if name[c] == truth[idx[j]] { hits += 1; per_class[truth[idx[j]]][0] += 1; }
        }
    }
    let purity: usize = counts.iter().map(|c| c.iter().max().unwrap()).sum();
    let acc = 100.0*hits as f64/total as f64;
    if report {
        println!("jitter={jitter} dur={dur} alpha={alpha}: purity={:.3} acc={acc:.2}% per-class={:?}",
            purity as f64 / truth.len() as f64,
            per_class.iter().map(|c| format!("{:.0}%", 100.0*c[0] as f64/c[1] as f64)).collect::<Vec<_>>());
    }
    acc
}

fn main() {
    run(0.06, 0.7, 0.75, true);
    run(0.0, 0.7, 0.75, true);
    run(0.0, 1.0, 0.75, true);
    run(0.06, 1.0, 0.75, true);
    run(0.06, 1.0, 1.0, true);
    run(0.03, 1.0, 0.75, true);
}
