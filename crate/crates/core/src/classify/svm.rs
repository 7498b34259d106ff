//! Soft-margin kernel SVMs trained by sequential two-variable coordinate
//! optimization on the dual, plus the one-against-one multiclass ensemble.
//!
//! The solver repeatedly picks the maximal violating pair of the KKT
//! conditions and solves the two-variable subproblem analytically,
//! terminating when the violation drops below tolerance. Selection ties
//! break on the lowest index so training is deterministic.

use serde::{Deserialize, Serialize};

use super::coupling::{couple_pairwise, sigmoid_fit, sigmoid_predict};
use super::ClassifyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-3, max_iter: 1_000_000 }
    }
}

/// A trained binary classifier: support vectors, their `alpha_i * y_i`
/// coefficients, and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Platt sigmoid (a, b) fitted on training decision values.
    pub calibration: Option<(f64, f64)>,
}

impl BinarySvm {
    /// Raw decision value `sum_i coef_i k(s_i, x) + bias`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, x))
            .sum::<f64>()
            + self.bias
    }

    /// Calibrated P(y = +1 | x). Falls back to a unit-scale sigmoid when no
    /// calibration was fitted.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let f = self.decision(x);
        match self.calibration {
            Some((a, b)) => sigmoid_predict(f, a, b),
            None => 1.0 / (1.0 + (-f).exp()),
        }
    }
}

/// Intermediate dual solution, exposed for optimality checks.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Final maximal KKT violation.
    pub violation: f64,
}

/// Solves the dual on a precomputed kernel matrix.
///
/// `min 1/2 a'Qa - e'a` with `Q_ij = y_i y_j K_ij`, subject to
/// `0 <= a_i <= C` and `y'a = 0`.
pub fn solve_dual(
    gram: &[Vec<f64>],
    y: &[i8],
    params: &TrainParams,
) -> Result<DualSolution, ClassifyError> {
    let n = y.len();
    let c = params.c;
    if !(c > 0.0) {
        return Err(ClassifyError::InvalidParameter(format!("C must be > 0, got {c}")));
    }
    let q = |i: usize, j: usize| (y[i] as f64) * (y[j] as f64) * gram[i][j];
    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective: G_i = (Q alpha)_i - 1
    let mut grad = vec![-1.0f64; n];
    let mut violation = f64::INFINITY;

    for _ in 0..params.max_iter {
        // maximal violating pair
        let mut i_sel = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let yg = -(y[t] as f64) * grad[t];
            let in_up = (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < c);
            if in_up && yg > m_up {
                m_up = yg;
                i_sel = Some(t);
            }
            if in_low && yg < m_low {
                m_low = yg;
                j_sel = Some(t);
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        violation = m_up - m_low;
        if violation <= params.tol {
            break;
        }

        let old_i = alpha[i];
        let old_j = alpha[j];
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            } else if diff <= 0.0 && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            } else if diff <= 0.0 && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            } else if sum <= c && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            } else if sum <= c && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        if di == 0.0 && dj == 0.0 {
            break;
        }
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from the KKT conditions: average over free vectors, else the
    // midpoint of the bound interval
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..y.len() {
        let yg = (y[t] as f64) * grad[t];
        let at_upper = alpha[t] >= c - 1e-12;
        let at_lower = alpha[t] <= 1e-12;
        if at_upper {
            if y[t] < 0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if at_lower {
            if y[t] > 0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { (upper + lower) / 2.0 };
    Ok(DualSolution { alpha, bias: -rho, violation })
}

/// Trains a binary classifier on `{-1, +1}` labels.
pub fn train_binary(
    x: &[Vec<f64>],
    y: &[i8],
    kernel: Kernel,
    params: &TrainParams,
) -> Result<BinarySvm, ClassifyError> {
    if x.len() != y.len() {
        return Err(ClassifyError::DimensionMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(ClassifyError::TooFewSamples { needed: 2, got: 0 });
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(ClassifyError::SingleClass);
    }
    let n = x.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&x[i], &x[j]);
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    let solution = solve_dual(&gram, y, params)?;
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        if solution.alpha[i] > 1e-12 {
            support.push(x[i].clone());
            coef.push(solution.alpha[i] * y[i] as f64);
        }
    }
    Ok(BinarySvm { kernel, support, coef, bias: solution.bias, calibration: None })
}

/// Duality gap of a solution on its training problem: primal objective minus
/// dual objective, non-negative and zero at the exact optimum.
pub fn duality_gap(gram: &[Vec<f64>], y: &[i8], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = y.len();
    let mut w_norm2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            w_norm2 += alpha[i] * alpha[j] * (y[i] as f64) * (y[j] as f64) * gram[i][j];
        }
    }
    let mut hinge = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .map(|j| alpha[j] * (y[j] as f64) * gram[i][j])
            .sum::<f64>()
            + bias;
        hinge += (1.0 - (y[i] as f64) * f).max(0.0);
    }
    let primal = 0.5 * w_norm2 + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * w_norm2;
    primal - dual
}

/// One pair of the one-against-one ensemble: positive class `i`, negative
/// class `j`, and the calibrated binary machine between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClassifier {
    pub positive: usize,
    pub negative: usize,
    pub svm: BinarySvm,
}

/// One-against-one ensemble of `k*(k-1)/2` calibrated binary classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmEnsemble {
    pub k: usize,
    pub pairs: Vec<PairClassifier>,
}

impl SvmEnsemble {
    /// Trains all class pairs. Each pair's Platt sigmoid is fitted on its own
    /// training decision values.
    pub fn train(
        features: &[Vec<f64>],
        labels: &[usize],
        k: usize,
        kernel: Kernel,
        params: &TrainParams,
    ) -> Result<Self, ClassifyError> {
        if features.len() != labels.len() {
            return Err(ClassifyError::DimensionMismatch(features.len(), labels.len()));
        }
        for &l in labels {
            if l >= k {
                return Err(ClassifyError::LabelOutOfRange { got: l, k });
            }
        }
        let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                let mut x = Vec::new();
                let mut y: Vec<i8> = Vec::new();
                for (f, &l) in features.iter().zip(labels) {
                    if l == i {
                        x.push(f.clone());
                        y.push(1);
                    } else if l == j {
                        x.push(f.clone());
                        y.push(-1);
                    }
                }
                if !y.contains(&1) {
                    return Err(ClassifyError::MissingClass(i.to_string()));
                }
                if !y.contains(&-1) {
                    return Err(ClassifyError::MissingClass(j.to_string()));
                }
                let mut svm = train_binary(&x, &y, kernel, params)?;
                let decisions: Vec<f64> = x.iter().map(|p| svm.decision(p)).collect();
                let targets: Vec<f64> = y.iter().map(|&v| v as f64).collect();
                svm.calibration = Some(sigmoid_fit(&decisions, &targets));
                pairs.push(PairClassifier { positive: i, negative: j, svm });
            }
        }
        Ok(Self { k, pairs })
    }

    /// Pairwise probability matrix `r[i][j] = P(class i | i or j)`.
    pub fn pairwise_probabilities(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut r = vec![vec![0.0; self.k]; self.k];
        for pair in &self.pairs {
            // guard the coupling against exactly-0/1 probabilities
            let p = pair.svm.probability(x).clamp(1e-7, 1.0 - 1e-7);
            r[pair.positive][pair.negative] = p;
            r[pair.negative][pair.positive] = 1.0 - p;
        }
        r
    }

    /// Single coupled probability distribution over the `k` classes.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        couple_pairwise(&self.pairwise_probabilities(x))
    }
}

/// 5-fold cross-validated grid search over `C in 2^-3..2^7` and, for RBF,
/// `gamma in 2^-7..2^3`, maximizing window-level accuracy.
pub fn grid_search(
    features: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    rbf: bool,
    params: &TrainParams,
    seed: u64,
) -> Result<(f64, Option<f64>), ClassifyError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let folds = 5.min(features.len());
    let c_grid: Vec<f64> = (-3..=7).map(|e| 2.0f64.powi(e)).collect();
    let g_grid: Vec<Option<f64>> = if rbf {
        (-7..=3).map(|e| Some(2.0f64.powi(e))).collect()
    } else {
        vec![None]
    };
    let mut best = (f64::NEG_INFINITY, 1.0, None);
    for &c in &c_grid {
        for &gamma in &g_grid {
            let kernel = match gamma {
                Some(g) => Kernel::Rbf { gamma: g },
                None => Kernel::Linear,
            };
            let mut correct = 0usize;
            let mut total = 0usize;
            for fold in 0..folds {
                let test: Vec<usize> =
                    order.iter().copied().skip(fold).step_by(folds).collect();
                let test_set: std::collections::HashSet<usize> = test.iter().copied().collect();
                let mut xtr = Vec::new();
                let mut ytr = Vec::new();
                for i in 0..features.len() {
                    if !test_set.contains(&i) {
                        xtr.push(features[i].clone());
                        ytr.push(labels[i]);
                    }
                }
                let trained = SvmEnsemble::train(
                    &xtr,
                    &ytr,
                    k,
                    kernel,
                    &TrainParams { c, ..*params },
                );
                let ensemble = match trained {
                    Ok(e) => e,
                    Err(ClassifyError::MissingClass(_)) => continue,
                    Err(e) => return Err(e),
                };
                for &i in &test {
                    let proba = ensemble.predict_proba(&features[i]);
                    let pred = proba
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(idx, _)| idx)
                        .unwrap();
                    total += 1;
                    if pred == labels[i] {
                        correct += 1;
                    }
                }
            }
            let acc = if total > 0 { correct as f64 / total as f64 } else { 0.0 };
            if acc > best.0 {
                best = (acc, c, gamma);
            }
        }
    }
    Ok((best.1, best.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_margin_matches_closed_form() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let y = vec![1i8, -1];
        let params = TrainParams { c: 1000.0, tol: 1e-10, ..Default::default() };
        let svm = train_binary(&x, &y, Kernel::Linear, &params).unwrap();
        // max-margin separator: w = (1, 0), b = 0, alphas = 0.5
        let w: Vec<f64> = (0..2)
            .map(|d| svm.support.iter().zip(&svm.coef).map(|(s, c)| c * s[d]).sum())
            .collect();
        assert!((w[0] - 1.0).abs() < 1e-6, "w = {w:?}");
        assert!(w[1].abs() < 1e-6);
        assert!(svm.bias.abs() < 1e-6);
        assert!((svm.decision(&x[0]) - 1.0).abs() < 1e-6);
        assert!((svm.decision(&x[1]) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn xor_needs_the_rbf_kernel() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = vec![1i8, 1, -1, -1];
        let params = TrainParams { c: 10.0, tol: 1e-6, ..Default::default() };
        let linear = train_binary(&x, &y, Kernel::Linear, &params).unwrap();
        let linear_acc = x
            .iter()
            .zip(&y)
            .filter(|(p, &l)| (linear.decision(p) >= 0.0) == (l > 0))
            .count() as f64
            / 4.0;
        assert!(linear_acc <= 0.75, "linear kernel cannot separate xor: {linear_acc}");

        let rbf = train_binary(&x, &y, Kernel::Rbf { gamma: 1.0 }, &params).unwrap();
        for (p, &l) in x.iter().zip(&y) {
            assert!((rbf.decision(p) >= 0.0) == (l > 0));
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
        loop {
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            if y.contains(&1) && y.contains(&-1) {
                return (x, y);
            }
        }
    }

    #[test]
    fn duality_gap_vanishes_at_tight_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let (x, y) = random_problem(&mut rng, 40);
            let c = [0.1, 1.0, 10.0][trial % 3];
            let params = TrainParams { c, tol: 1e-10, ..Default::default() };
            let n = x.len();
            let kernel = Kernel::Rbf { gamma: 0.5 };
            let mut gram = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    gram[i][j] = kernel.eval(&x[i], &x[j]);
                }
            }
            let sol = solve_dual(&gram, &y, &params).unwrap();
            let gap = duality_gap(&gram, &y, &sol.alpha, sol.bias, c);
            let mut w_norm2 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    w_norm2 +=
                        sol.alpha[i] * sol.alpha[j] * (y[i] as f64) * (y[j] as f64) * gram[i][j];
                }
            }
            let primal = gap + sol.alpha.iter().sum::<f64>() - 0.5 * w_norm2;
            assert!(
                gap <= 1e-6 * (1.0 + primal.abs()),
                "trial {trial}: gap {gap} vs primal {primal}"
            );
            assert!(gap >= -1e-9);
        }
    }

    #[test]
    fn dual_constraints_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = random_problem(&mut rng, 30);
        let params = TrainParams { c: 2.0, tol: 1e-8, ..Default::default() };
        let n = x.len();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = Kernel::Linear.eval(&x[i], &x[j]);
            }
        }
        let sol = solve_dual(&gram, &y, &params).unwrap();
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, &l)| a * l as f64).sum();
        assert!(balance.abs() < 1e-9, "sum alpha_i y_i = {balance}");
        for &a in &sol.alpha {
            assert!((-1e-12..=2.0 + 1e-12).contains(&a));
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            train_binary(&x, &[1, 1], Kernel::Linear, &TrainParams::default()),
            Err(ClassifyError::SingleClass)
        );
    }

    #[test]
    fn separable_ensemble_classifies_training_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let centers = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)];
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..15 {
                features.push(vec![
                    cx + rng.gen_range(-1.0..1.0),
                    cy + rng.gen_range(-1.0..1.0),
                ]);
                labels.push(k);
            }
        }
        let ensemble = SvmEnsemble::train(
            &features,
            &labels,
            3,
            Kernel::Linear,
            &TrainParams::default(),
        )
        .unwrap();
        assert_eq!(ensemble.pairs.len(), 3);
        for (f, &l) in features.iter().zip(&labels) {
            let proba = ensemble.predict_proba(f);
            let sum: f64 = proba.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            let pred = proba
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(pred, l);
        }
    }

    #[test]
    fn ensemble_requires_every_class() {
        let features = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![0usize, 0, 1];
        assert!(matches!(
            SvmEnsemble::train(&features, &labels, 3, Kernel::Linear, &TrainParams::default()),
            Err(ClassifyError::MissingClass(_))
        ));
    }
}
