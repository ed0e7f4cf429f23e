use crate::{Error, Result};

/// One ROC vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

fn validate(labels: &[bool], scores: &[f64]) -> Result<(usize, usize)> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidParameter(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::InvalidParameter(format!("score {i} is NaN")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc(format!(
            "need both classes, got {pos} positive and {neg} negative"
        )));
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score, grouped into runs of equal score;
/// each group yields `(positives, negatives)`.
fn tie_groups(labels: &[bool], scores: &[f64]) -> Vec<(u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut p, mut n) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        groups.push((p, n));
    }
    groups
}

/// Mann-Whitney AUC: `(concordant + tied / 2) / (positives * negatives)`,
/// counted exactly in integers.
pub fn compute_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = validate(labels, scores)?;
    // Walk from the lowest score up so negatives-below is a running count.
    let mut neg_below = 0u64;
    let mut twice_wins = 0u128;
    for (p, n) in tie_groups(labels, scores).into_iter().rev() {
        twice_wins += 2 * p as u128 * neg_below as u128 + p as u128 * n as u128;
        neg_below += n;
    }
    Ok(twice_wins as f64 / (2.0 * pos as f64 * neg as f64))
}

/// ROC vertices from the strictest threshold down, starting at (0, 0) and
/// ending at (1, 1). Tied scores move diagonally.
pub fn roc_curve(labels: &[bool], scores: &[f64]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = validate(labels, scores)?;
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, n) in tie_groups(labels, scores) {
        tp += p;
        fp += n;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}
