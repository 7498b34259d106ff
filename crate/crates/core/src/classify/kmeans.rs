//! Lloyd's k-means with k-means++ seeding, deterministic given the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClassifyError;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// Cluster index in 0..k per input row.
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding: first center uniform, later centers sampled with
/// probability proportional to squared distance from the chosen set.
fn seed_centers(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(data[rng.gen_range(0..data.len())].clone());
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all points coincide with a center; any choice is equivalent
            rng.gen_range(0..data.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = data.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.push(data[next].clone());
        for (i, p) in data.iter().enumerate() {
            let d = sq_dist(p, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

/// Standard Lloyd iteration with squared-Euclidean assignments.
///
/// Converges when assignments stop changing or after 300 iterations. A
/// cluster that empties is re-seeded at the point farthest from its
/// assigned center.
pub fn kmeans(data: &[Vec<f64>], k: usize, seed: u64) -> Result<KmeansResult, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::InvalidParameter("k must be >= 1".into()));
    }
    if data.len() < k {
        return Err(ClassifyError::TooFewSamples { needed: k, got: data.len() });
    }
    let dim = data[0].len();
    for row in data {
        if row.len() != dim {
            return Err(ClassifyError::DimensionMismatch(dim, row.len()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(data, k, &mut rng);
    let mut labels = vec![usize::MAX; data.len()];
    let mut iterations = 0;
    for _ in 0..300 {
        iterations += 1;
        let mut changed = false;
        for (i, p) in data.iter().enumerate() {
            let (c, _) = nearest(p, &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // recompute means; re-seed empty clusters at the farthest point
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let farthest = data
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p, &centers[labels[i]])))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .unwrap();
                centers[c] = data[farthest].clone();
                changed = true;
            } else {
                for (dst, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KmeansResult { labels, centers, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(centers: &[(f64, f64)], per_blob: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for &(cx, cy) in centers {
            for _ in 0..per_blob {
                data.push(vec![
                    cx + rng.gen_range(-spread..spread),
                    cy + rng.gen_range(-spread..spread),
                ]);
            }
        }
        data
    }

    #[test]
    fn separates_four_blobs_perfectly() {
        let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0)];
        let data = blobs(&centers, 50, 1.0, 3);
        let result = kmeans(&data, 4, 11).unwrap();
        // purity 1.0: every blob lands in exactly one cluster
        for blob in 0..4 {
            let slice = &result.labels[blob * 50..(blob + 1) * 50];
            assert!(slice.iter().all(|&l| l == slice[0]), "blob {blob} split: {slice:?}");
        }
        let distinct: std::collections::HashSet<usize> = result.labels.iter().copied().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn k_equals_one_gives_mean_center() {
        let data = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![5.0, 6.0]];
        let result = kmeans(&data, 1, 0).unwrap();
        assert!(result.labels.iter().all(|&l| l == 0));
        assert!((result.centers[0][0] - 3.0).abs() < 1e-12);
        assert!((result.centers[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rows_share_labels() {
        let mut data = blobs(&[(0.0, 0.0), (8.0, 8.0)], 20, 0.5, 5);
        data.push(data[0].clone());
        let result = kmeans(&data, 2, 9).unwrap();
        assert_eq!(result.labels[0], *result.labels.last().unwrap());
    }

    #[test]
    fn deterministic_given_seed() {
        let data = blobs(&[(0.0, 0.0), (4.0, 4.0), (8.0, 0.0)], 30, 1.2, 2);
        let a = kmeans(&data, 3, 1234).unwrap();
        let b = kmeans(&data, 3, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_k_larger_than_sample_count() {
        let data = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(
            kmeans(&data, 4, 0),
            Err(ClassifyError::TooFewSamples { needed: 4, got: 3 })
        );
    }

    #[test]
    fn survives_coincident_points() {
        let data = vec![vec![1.0, 1.0]; 10];
        let result = kmeans(&data, 2, 0).unwrap();
        assert_eq!(result.labels.len(), 10);
    }
}
