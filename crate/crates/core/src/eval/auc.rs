use crate::error::{Error, Result};

/// Area under the ROC curve via the rank-sum (Mann-Whitney) formula, with
/// tied scores sharing their average rank.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Ranks are 1-based; a tie group spanning ranks i+1..=j gets (i+1+j)/2.
    // Doubled ranks stay integral so the sum is exact.
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let doubled = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&o| labels[o]).count() as u64;
        pos_rank_sum2 += doubled * pos_in_group;
        i = j;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    // 2U = 2R - P(P+1)
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / 2.0 / (p * n) as f64)
}
