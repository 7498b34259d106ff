//! Generative Gaussian similarity model over block-structured histograms.
//!
//! Each cluster is summarized by a mean histogram (per-block renormalized)
//! and the covariance of 4-vectors of per-block squared Euclidean distances.
//! Scoring maps a descriptor to `exp(-d' Sigma^-1 d)` per cluster: 1 at the
//! cluster mean, falling toward 0 with Mahalanobis-style distance.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::ClassifyError;

pub const BLOCKS: usize = 4;

/// One cluster: per-block mean histogram plus distance covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgmClass {
    /// Flat mean histogram, `BLOCKS * block_len` values, each block summing
    /// to 1 (or all-zero).
    pub mean: Vec<f64>,
    /// 4x4 covariance of per-block squared-distance vectors, regularized to
    /// be invertible.
    pub covariance: [[f64; 4]; 4],
    /// Number of member descriptors at fit time.
    pub size: usize,
}

/// A fitted model: `k` clusters over descriptors of `BLOCKS * block_len`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GgmModel {
    pub block_len: usize,
    pub classes: Vec<GgmClass>,
    #[serde(skip)]
    inverses: Vec<Matrix4<f64>>,
}

impl PartialEq for GgmModel {
    fn eq(&self, other: &Self) -> bool {
        // the inverse cache is derived state
        self.block_len == other.block_len && self.classes == other.classes
    }
}

fn block_sq_dist(a: &[f64], b: &[f64], block_len: usize, j: usize) -> f64 {
    let range = j * block_len..(j + 1) * block_len;
    a[range.clone()]
        .iter()
        .zip(&b[range])
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn distance_vector(descriptor: &[f64], mean: &[f64], block_len: usize) -> Vector4<f64> {
    Vector4::from_fn(|j, _| block_sq_dist(descriptor, mean, block_len, j))
}

fn invert(cov: &[[f64; 4]; 4]) -> Result<Matrix4<f64>, ClassifyError> {
    let m = Matrix4::from_fn(|r, c| cov[r][c]);
    m.try_inverse().ok_or_else(|| {
        ClassifyError::InvalidParameter("covariance not invertible after regularization".into())
    })
}

impl GgmModel {
    /// Fits cluster models from labeled descriptors.
    ///
    /// Per cluster: blockwise mean renormalized to unit block sums, then the
    /// sample covariance (mean-centered, n-1 denominator) of the members'
    /// distance vectors to that mean, regularized by `eps * I` with
    /// `eps = 1e-8 * trace / 4` (floored at 1e-12 for degenerate clusters).
    /// Clusters with fewer than 2 members are an error.
    pub fn fit(
        features: &[Vec<f64>],
        labels: &[usize],
        k: usize,
        block_len: usize,
    ) -> Result<Self, ClassifyError> {
        if features.is_empty() {
            return Err(ClassifyError::TooFewSamples { needed: 1, got: 0 });
        }
        let dim = BLOCKS * block_len;
        for f in features {
            if f.len() != dim {
                return Err(ClassifyError::DimensionMismatch(dim, f.len()));
            }
        }
        for &l in labels {
            if l >= k {
                return Err(ClassifyError::LabelOutOfRange { got: l, k });
            }
        }
        let mut classes = Vec::with_capacity(k);
        for cluster in 0..k {
            let members: Vec<&Vec<f64>> = features
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == cluster)
                .map(|(f, _)| f)
                .collect();
            if members.len() < 2 {
                return Err(ClassifyError::DegenerateCluster(cluster));
            }
            let mut mean = vec![0.0; dim];
            for m in &members {
                for (dst, v) in mean.iter_mut().zip(m.iter()) {
                    *dst += v;
                }
            }
            for v in &mut mean {
                *v /= members.len() as f64;
            }
            for j in 0..BLOCKS {
                let total: f64 = mean[j * block_len..(j + 1) * block_len].iter().sum();
                if total > 0.0 {
                    for v in &mut mean[j * block_len..(j + 1) * block_len] {
                        *v /= total;
                    }
                }
            }
            let dvecs: Vec<Vector4<f64>> =
                members.iter().map(|m| distance_vector(m, &mean, block_len)).collect();
            let d_mean =
                dvecs.iter().fold(Vector4::zeros(), |acc, d| acc + d) / members.len() as f64;
            let mut cov = Matrix4::zeros();
            for d in &dvecs {
                let centered = d - d_mean;
                cov += centered * centered.transpose();
            }
            cov /= (members.len() - 1) as f64;
            let eps = (1e-8 * cov.trace() / 4.0).max(1e-12);
            for i in 0..4 {
                cov[(i, i)] += eps;
            }
            let mut covariance = [[0.0; 4]; 4];
            for r in 0..4 {
                for c in 0..4 {
                    covariance[r][c] = cov[(r, c)];
                }
            }
            classes.push(GgmClass { mean, covariance, size: members.len() });
        }
        Self::from_classes(block_len, classes)
    }

    /// Rebuilds a model (and its cached inverses) from stored parts.
    pub fn from_classes(block_len: usize, classes: Vec<GgmClass>) -> Result<Self, ClassifyError> {
        let inverses = classes
            .iter()
            .map(|c| invert(&c.covariance))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { block_len, classes, inverses })
    }

    /// Restores the inverse cache after deserialization.
    pub fn rebuild_caches(&mut self) -> Result<(), ClassifyError> {
        self.inverses = self
            .classes
            .iter()
            .map(|c| invert(&c.covariance))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    /// Similarity scores in (0, 1], one per cluster.
    pub fn score(&self, descriptor: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .zip(&self.inverses)
            .map(|(class, inv)| {
                let d = distance_vector(descriptor, &class.mean, self.block_len);
                let quad = (d.transpose() * inv * d)[(0, 0)];
                (-quad.max(0.0)).exp()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block_histogram(hot: [usize; 4], v: usize) -> Vec<f64> {
        let mut out = vec![0.0; 4 * v];
        for (j, h) in hot.iter().enumerate() {
            out[j * v + h] = 1.0;
        }
        out
    }

    fn jitter(base: &[f64], rng: &mut ChaCha8Rng, amount: f64) -> Vec<f64> {
        let v = base.len() / 4;
        let mut out: Vec<f64> =
            base.iter().map(|x| (x + rng.gen_range(0.0..amount)).max(0.0)).collect();
        for j in 0..4 {
            let total: f64 = out[j * v..(j + 1) * v].iter().sum();
            for x in &mut out[j * v..(j + 1) * v] {
                *x /= total;
            }
        }
        out
    }

    fn toy_model() -> (GgmModel, Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let protos = [
            block_histogram([0, 1, 2, 3], 4),
            block_histogram([3, 2, 1, 0], 4),
        ];
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (k, proto) in protos.iter().enumerate() {
            for _ in 0..20 {
                features.push(jitter(proto, &mut rng, 0.15));
                labels.push(k);
            }
        }
        let model = GgmModel::fit(&features, &labels, 2, 4).unwrap();
        (model, features, labels)
    }

    #[test]
    fn score_is_one_at_the_mean() {
        let (model, _, _) = toy_model();
        for k in 0..2 {
            let scores = model.score(&model.classes[k].mean);
            assert!((scores[k] - 1.0).abs() < 1e-12);
            // mathematically in (0, 1]; exp underflows to 0 far from a mean
            for (i, &s) in scores.iter().enumerate() {
                assert!((0.0..=1.0).contains(&s), "score[{i}]={s}");
            }
        }
    }

    #[test]
    fn scores_decrease_away_from_the_mean() {
        let (model, _, _) = toy_model();
        let mean = model.classes[0].mean.clone();
        let other = model.classes[1].mean.clone();
        let mut prev = f64::INFINITY;
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let probe: Vec<f64> =
                mean.iter().zip(&other).map(|(a, b)| a * (1.0 - t) + b * t).collect();
            let s = model.score(&probe)[0];
            assert!(s <= prev + 1e-12, "step {step}: {s} > {prev}");
            prev = s;
        }
    }

    #[test]
    fn scores_invariant_to_cluster_relabeling() {
        let (_, features, labels) = toy_model();
        let model_a = GgmModel::fit(&features, &labels, 2, 4).unwrap();
        let swapped: Vec<usize> = labels.iter().map(|&l| 1 - l).collect();
        let model_b = GgmModel::fit(&features, &swapped, 2, 4).unwrap();
        let probe = &features[3];
        let sa = model_a.score(probe);
        let sb = model_b.score(probe);
        assert!((sa[0] - sb[1]).abs() < 1e-12);
        assert!((sa[1] - sb[0]).abs() < 1e-12);
    }

    #[test]
    fn identical_members_give_regularized_identity_covariance() {
        let proto = block_histogram([0, 0, 0, 0], 4);
        let features = vec![proto.clone(); 5];
        let labels = vec![0usize; 5];
        let model = GgmModel::fit(&features, &labels, 1, 4).unwrap();
        let cov = model.classes[0].covariance;
        for r in 0..4 {
            for c in 0..4 {
                if r == c {
                    assert!(cov[r][c] > 0.0, "diagonal must be regularized");
                } else {
                    assert_eq!(cov[r][c], 0.0);
                }
            }
        }
        assert!((model.score(&proto)[0] - 1.0).abs() < 1e-12);
    }

    fn sorted_eigenvalues(cov: &[[f64; 4]; 4]) -> Vec<f64> {
        let m = Matrix4::from_fn(|r, c| cov[r][c]);
        let mut values: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values
    }

    #[test]
    fn small_cluster_covariance_rank_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let proto = block_histogram([0, 1, 0, 1], 4);
        // n=2: both distance vectors to the blockwise midpoint coincide, so
        // the centered covariance is exactly zero and only eps*I remains
        let pair = vec![jitter(&proto, &mut rng, 0.2), jitter(&proto, &mut rng, 0.2)];
        let model = GgmModel::fit(&pair, &[0, 0], 1, 4).unwrap();
        let values = sorted_eigenvalues(&model.classes[0].covariance);
        assert!(values[3] <= 1e-11, "rank 0 plus regularization: {values:?}");
        assert!(values[0] > 0.0, "still invertible: {values:?}");

        // n=3: sample covariance of three 4-vectors has rank <= 2
        let triple = vec![
            jitter(&proto, &mut rng, 0.2),
            jitter(&proto, &mut rng, 0.2),
            jitter(&proto, &mut rng, 0.2),
        ];
        let model = GgmModel::fit(&triple, &[0, 0, 0], 1, 4).unwrap();
        let values = sorted_eigenvalues(&model.classes[0].covariance);
        assert!(
            values[1] / values[3].max(1e-300) < 1e-6,
            "two near-zero eigenvalues expected: {values:?}"
        );
    }

    #[test]
    fn undersized_cluster_is_an_error() {
        let features = vec![block_histogram([0, 0, 0, 0], 4); 3];
        assert_eq!(
            GgmModel::fit(&features, &[0, 0, 1], 2, 4),
            Err(ClassifyError::DegenerateCluster(1))
        );
    }
}
