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
    let mut truth = Vec::new();
    let mut sample_of = Vec::new();
    for (i, (s, c)) in corpus.iter().enumerate() {
        for r in extract_stream(s, &cfg, "x", i).unwrap() {
            vectors.push(r.vector); truth.push(c.index()); sample_of.push(i);
        }
    }
    let km = kmeans(&vectors, 4, 7).unwrap();

    // per-cluster means (blockwise renormalized)
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

    // cleaner: score with non-centered second moment, report memory accuracy
    let mut inv = Vec::new();
    for k in 0..4 {
        let mut m2 = Matrix4::zeros();
        let mut n = 0.0;
        for (v, &l) in vectors.iter().zip(&km.labels) {
            if l != k { continue; }
            let d = dvec(v, &means[k]);
            m2 += d * d.transpose();
            n += 1.0;
        }
        m2 /= n;
        let eps = (1e-8 * m2.trace() / 4.0).max(1e-12);
        for i in 0..4 { m2[(i,i)] += eps; }
        inv.push(m2.try_inverse().unwrap());
    }
    // cluster -> class mapping by majority
    let mut counts = vec![[0usize;4];4];
    for (l, t) in km.labels.iter().zip(&truth) { counts[*l][*t] += 1; }
    let name: Vec<usize> = (0..4).map(|k| counts[k].iter().enumerate().max_by_key(|(_,c)| **c).unwrap().0).collect();
    println!("cluster->class: {name:?}");

    // memory-smoothed accuracy per sample
    let mut qs_member = Vec::new();
    let n_samples = sample_of.iter().max().unwrap() + 1;
    let mut hits2 = 0usize; let mut total2 = 0usize;
    for s in 0..n_samples {
        let idx: Vec<usize> = (0..vectors.len()).filter(|&i| sample_of[i] == s).collect();
        let scores: Vec<Vec<f64>> = idx.iter().map(|&i| {
            (0..4).map(|k| {
                let d = dvec(&vectors[i], &means[k]);
                let q = (d.transpose() * inv[k] * d)[(0,0)];
                if km.labels[i] == k { qs_member.push(q); }
                (-q).exp()
            }).collect()
        }).collect();
        let decided = classify_with_memory(&scores, 0.75);
        for (j, &c) in decided.iter().enumerate() {
            total2 += 1;
            if name[c] == truth[idx[j]] { hits2 += 1; }
        }
    }
    qs_member.sort_by(|a,b| a.total_cmp(b));
    println!("member q quartiles (non-centered): {:.2} {:.2} {:.2}",
        qs_member[qs_member.len()/4], qs_member[qs_member.len()/2], qs_member[3*qs_member.len()/4]);
    println!("memory accuracy with non-centered second moment: {:.2}%", 100.0*hits2 as f64/total2 as f64);
}
