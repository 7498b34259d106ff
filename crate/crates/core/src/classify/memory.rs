//! Memory-smoothed window classification and per-sample voting.

/// Blends each window's scores with the previous window's:
/// `P(w_i) = alpha * f(w_i) + (1 - alpha) * f(w_{i-1})`, with
/// `P(w_0) = f(w_0)`.
pub fn memory_smooth(scores: &[Vec<f64>], alpha: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(scores.len());
    for (i, current) in scores.iter().enumerate() {
        if i == 0 {
            out.push(current.clone());
        } else {
            let prev = &scores[i - 1];
            out.push(
                current
                    .iter()
                    .zip(prev)
                    .map(|(c, p)| alpha * c + (1.0 - alpha) * p)
                    .collect(),
            );
        }
    }
    out
}

/// Index of the maximal score; ties break toward the lowest class index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Memory-smoothed per-window decisions over one window sequence.
pub fn classify_with_memory(scores: &[Vec<f64>], alpha: f64) -> Vec<usize> {
    memory_smooth(scores, alpha).iter().map(|p| argmax(p)).collect()
}

/// Modal class of the per-window votes; ties break toward the lowest class
/// index. `None` for an empty vote list.
pub fn majority_vote(votes: &[usize], k: usize) -> Option<usize> {
    if votes.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; k];
    for &v in votes {
        counts[v] += 1;
    }
    Some(argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_one_is_memoryless() {
        let scores = vec![vec![0.2, 0.8], vec![0.9, 0.1], vec![0.4, 0.6]];
        assert_eq!(memory_smooth(&scores, 1.0), scores);
    }

    #[test]
    fn alpha_zero_repeats_previous_scores() {
        let scores = vec![vec![0.2, 0.8], vec![0.9, 0.1], vec![0.4, 0.6]];
        let smoothed = memory_smooth(&scores, 0.0);
        assert_eq!(smoothed[0], scores[0]);
        assert_eq!(smoothed[1], scores[0]);
        assert_eq!(smoothed[2], scores[1]);
    }

    #[test]
    fn argmax_invariant_to_positive_scaling() {
        let scores = vec![vec![0.2, 0.8, 0.5], vec![0.9, 0.1, 0.3]];
        let base: Vec<usize> = classify_with_memory(&scores, 0.6);
        let scaled: Vec<Vec<f64>> =
            scores.iter().map(|s| s.iter().map(|v| v * 7.5).collect()).collect();
        assert_eq!(classify_with_memory(&scaled, 0.6), base);
    }

    #[test]
    fn memory_recovers_a_corrupted_window() {
        // class 0 scores strongly except one window where the scores of the
        // two classes were swapped
        let mut scores = vec![vec![0.9, 0.1]; 6];
        scores[3] = vec![0.45, 0.55];
        let memoryless = classify_with_memory(&scores, 1.0);
        assert_eq!(memoryless[3], 1, "without memory the corrupt window flips");
        let smoothed = classify_with_memory(&scores, 0.75);
        assert!(smoothed.iter().all(|&c| c == 0), "{smoothed:?}");
    }

    #[test]
    fn vote_ties_break_low() {
        assert_eq!(majority_vote(&[0, 0, 1], 2), Some(0));
        assert_eq!(majority_vote(&[0, 1], 2), Some(0));
        assert_eq!(majority_vote(&[2, 2, 2], 3), Some(2));
        assert_eq!(majority_vote(&[], 3), None);
        assert_eq!(majority_vote(&[1, 2, 2, 1], 3), Some(1));
    }
}
