use evshape_core::classify::{classify_with_memory, kmeans};
use evshape_core::descriptor::RingConfig;
use evshape_core::event::FramingConfig;
use evshape_core::orientation::OrientationConfig;
use evshape_core::pipeline::*;
use evshape_core::synth::{suit_contour, synth_translating_contour, SyntheticScenario};
use evshape_core::dataset::SuitClass;
use nalgebra::{Matrix4, Vector4};

fn dvec(x: &[f64], mean: &[f64]) -> Vector4<f64> {
    Vector4::from_fn(|j, _| {
        x[j*4..(j+1)*4].iter().zip(&mean[j*4..(j+1)*4]).map(|(a,b)| (a-b)*(a-b)).sum()
    })
}

fn run(scale: f64, l: u16, dur: f64, kind: DescriptorKind) { run_n(scale, l, dur, kind, 2, 0.06) }

fn run_n(scale: f64, l: u16, dur: f64, kind: DescriptorKind, reps: usize, jitter: f64) {
    let cfg = FeatureConfig {
        framing: FramingConfig { n: 150, b: 50 },
        orientation: OrientationConfig { l, ..OrientationConfig::default() },
        descriptor: kind,
        ring: RingConfig::five_rings_one_cell(4),
    };
    let mut vectors = Vec::new();
    let mut truth = Vec::new();
    let mut sample_of = Vec::new();
    let mut sid = 0usize;
    for class in SuitClass::ALL {
        for rep in 0..reps {
            let seed = 7u64.wrapping_mul(0x100_0003).wrapping_add((class.index()*97 + rep) as u64);
            let mut sc = SyntheticScenario::translating_contour(suit_contour(class), 60.0, dur, seed);
            sc.scale = scale;
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
    for (v, &l2) in vectors.iter().zip(&km.labels) {
        sizes[l2] += 1;
        for (m, x) in means[l2].iter_mut().zip(v) { *m += x; }
    }
    for k in 0..4 {
        for m in &mut means[k] { *m /= sizes[k] as f64; }
        for j in 0..4 {
            let s: f64 = means[k][j*4..(j+1)*4].iter().sum();
            if s > 0.0 { for m in &mut means[k][j*4..(j+1)*4] { *m /= s; } }
        }
    }
    let mut counts = vec![[0usize;4];4];
    for (l2, t) in km.labels.iter().zip(&truth) { counts[*l2][*t] += 1; }
    let purity: usize = counts.iter().map(|c| c.iter().max().unwrap()).sum();
    let name: Vec<usize> = (0..4).map(|k| counts[k].iter().enumerate().max_by_key(|(_,c)| **c).unwrap().0).collect();

    for variant in ["noncentered", "centered"] {
        let mut inv = Vec::new();
        for k in 0..4 {
            let ds: Vec<Vector4<f64>> = vectors.iter().zip(&km.labels)
                .filter(|(_, &l2)| l2 == k).map(|(v, _)| dvec(v, &means[k])).collect();
            let dm = ds.iter().fold(Vector4::zeros(), |a, d| a + d) / ds.len() as f64;
            let mut m2 = Matrix4::zeros();
            for d in &ds {
                let c = if variant == "centered" { d - dm } else { *d };
                m2 += c * c.transpose();
            }
            m2 /= if variant == "centered" { (ds.len()-1) as f64 } else { ds.len() as f64 };
            let eps = (1e-8 * m2.trace() / 4.0).max(1e-12);
            for i in 0..4 { m2[(i,i)] += eps; }
            inv.push(m2.try_inverse().unwrap());
        }
        let mut hits = 0usize; let mut total = 0usize;
        for s in 0..sid {
            let idx: Vec<usize> = (0..vectors.len()).filter(|&i| sample_of[i] == s).collect();
            let scores: Vec<Vec<f64>> = idx.iter().map(|&i| {
                (0..4).map(|k| {
                    let d = dvec(&vectors[i], &means[k]);
                    (-(d.transpose() * inv[k] * d)[(0,0)]).exp()
                }).collect()
            }).collect();
            for (j, &c) in classify_with_memory(&scores, 0.75).iter().enumerate() {
                total += 1;
                if name[c] == truth[idx[j]] { hits += 1; }
            }
        }
        println!("scale={scale} L={l} dur={dur} {kind:?} {variant}: purity={:.3} acc={:.2}% ({} win)",
            purity as f64 / truth.len() as f64, 100.0*hits as f64/total as f64, total);
    }
}

fn main() {
    run_n(60.0, 9, 0.5, DescriptorKind::Hoe, 2, 0.06);
    run_n(60.0, 7, 0.5, DescriptorKind::Hoe, 2, 0.06);
    run_n(56.0, 9, 0.6, DescriptorKind::Hoe, 3, 0.03);
    run_n(60.0, 9, 0.5, DescriptorKind::Hoe, 3, 0.03);
    run_n(64.0, 9, 0.42, DescriptorKind::Hoe, 2, 0.06);
    run_n(60.0, 9, 0.5, DescriptorKind::Hoe, 4, 0.02);
}
