//! Area under the ROC curve via the Mann–Whitney rank sum.

use super::LearnError;

/// `(#concordant pairs + ½·#tied pairs) / (#pos · #neg)`, computed in
/// `O(n log n)` from average ranks. Labels are 0/1.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, LearnError> {
    if scores.len() != labels.len() {
        return Err(LearnError::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(LearnError::NonFiniteFeature);
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClassEval);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks doubled so tied averages stay integral
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1, average doubled = (i+1)+(j+1)
        let avg2 = (i + j + 2) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        pos_rank_sum2 += avg2 * pos_in_group;
        i = j + 1;
    }
    // U·2 = 2·R_pos − n_pos(n_pos+1)
    let u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / 2.0 / (n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut halves = 0u64;
        let (mut np, mut nn) = (0u64, 0u64);
        for (i, &li) in labels.iter().enumerate() {
            if li == 1 {
                np += 1;
            } else {
                nn += 1;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1 && lj == 0 {
                    if scores[i] > scores[j] {
                        halves += 2;
                    } else if scores[i] == scores[j] {
                        halves += 1;
                    }
                }
            }
        }
        halves as f64 / 2.0 / (np * nn) as f64
    }

    #[test]
    fn spec_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[0.8, 0.7, 0.3, 0.2], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(LearnError::SingleClassEval)));
    }

    proptest! {
        #[test]
        fn matches_pairwise(data in prop::collection::vec((0u8..6, 0u8..2), 2..40)) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 5.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            prop_assert_eq!(auc(&scores, &labels).unwrap(), pairwise(&scores, &labels));
        }

        #[test]
        fn monotone_invariance_and_complement(data in prop::collection::vec((-5.0f64..5.0, 0u8..2), 2..40)) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let a = auc(&scores, &labels).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(a, auc(&transformed, &labels).unwrap());
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).all(|w| w[0] < w[1]) {
                let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
                prop_assert!((a + auc(&neg, &labels).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
