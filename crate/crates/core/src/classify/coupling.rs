//! Platt sigmoid calibration and pairwise-probability coupling.

/// Fits sigmoid parameters `(a, b)` so that `P(y=1|f) = 1/(1+exp(a*f+b))`
/// by regularized maximum likelihood (Newton iterations with backtracking
/// line search). `labels` are +1/-1.
pub fn sigmoid_fit(decision_values: &[f64], labels: &[f64]) -> (f64, f64) {
    let l = decision_values.len();
    let prior1 = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let prior0 = l as f64 - prior1;

    let max_iter = 100;
    let min_step = 1e-10;
    let sigma = 1e-12;
    let eps = 1e-5;

    let hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    let lo_target = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> =
        labels.iter().map(|&y| if y > 0.0 { hi_target } else { lo_target }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        let mut val = 0.0;
        for i in 0..l {
            let f_apb = decision_values[i] * a + b;
            if f_apb >= 0.0 {
                val += t[i] * f_apb + (1.0 + (-f_apb).exp()).ln();
            } else {
                val += (t[i] - 1.0) * f_apb + (1.0 + f_apb.exp()).ln();
            }
        }
        val
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);

    for _ in 0..max_iter {
        let mut h11 = sigma;
        let mut h22 = sigma;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for i in 0..l {
            let f_apb = decision_values[i] * a + b;
            let (p, q) = if f_apb >= 0.0 {
                let e = (-f_apb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f_apb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += decision_values[i] * decision_values[i] * d2;
            h22 += d2;
            h21 += decision_values[i] * d2;
            let d1 = t[i] - p;
            g1 += decision_values[i] * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

/// Overflow-safe `P(y=1|f) = 1/(1+exp(a*f+b))`.
pub fn sigmoid_predict(decision_value: f64, a: f64, b: f64) -> f64 {
    let f_apb = decision_value * a + b;
    if f_apb >= 0.0 {
        (-f_apb).exp() / (1.0 + (-f_apb).exp())
    } else {
        1.0 / (1.0 + f_apb.exp())
    }
}

/// Couples pairwise probabilities `r[i][j] = P(i | i or j)` into a single
/// distribution over the classes.
///
/// Minimizes `sum_{i<j} (r_ji p_i - r_ij p_j)^2` subject to a unit sum by
/// fixed-point iteration, run to a stationarity residual of 1e-10.
pub fn couple_pairwise(r: &[Vec<f64>]) -> Vec<f64> {
    let k = r.len();
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![1.0];
    }
    let mut q = vec![vec![0.0; k]; k];
    for t in 0..k {
        for j in 0..k {
            if j == t {
                continue;
            }
            q[t][t] += r[j][t] * r[j][t];
            q[t][j] = -r[j][t] * r[t][j];
        }
    }
    let mut p = vec![1.0 / k as f64; k];
    let mut qp = vec![0.0; k];
    let max_iter = 100_000;
    let eps = 1e-10;
    for _ in 0..max_iter {
        let mut p_qp = 0.0;
        for t in 0..k {
            qp[t] = (0..k).map(|j| q[t][j] * p[j]).sum();
            p_qp += p[t] * qp[t];
        }
        let residual = (0..k).map(|t| (qp[t] - p_qp).abs()).fold(0.0f64, f64::max);
        if residual < eps {
            break;
        }
        for t in 0..k {
            let diff = (-qp[t] + p_qp) / q[t][t];
            p[t] += diff;
            p_qp = (p_qp + diff * (diff * q[t][t] + 2.0 * qp[t])) / (1.0 + diff) / (1.0 + diff);
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[t][j]) / (1.0 + diff);
                p[j] /= 1.0 + diff;
            }
        }
    }
    p
}
