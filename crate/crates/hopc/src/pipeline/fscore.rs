//! Discriminative-power scoring of codewords and mask selection.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Fisher-style score of one feature column: between-class scatter of the
/// class means over the summed within-class sample variances. A positive
/// numerator over a zero denominator is `+inf`; `0/0` scores 0. Every class
/// needs at least two samples for the unbiased variance.
pub fn fscore(values: &[f64], labels: &[usize]) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: labels.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::BadParameter("no samples to score".into()));
    }
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        groups.entry(l).or_default().push(v);
    }
    if groups.len() < 2 {
        return Err(Error::BadParameter(
            "feature scoring needs at least two classes".into(),
        ));
    }
    for (&label, members) in &groups {
        if members.len() < 2 {
            return Err(Error::DegenerateClass(label));
        }
    }
    let grand = values.iter().sum::<f64>() / values.len() as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for members in groups.values() {
        let n = members.len() as f64;
        let mean = members.iter().sum::<f64>() / n;
        between += (mean - grand) * (mean - grand);
        let ss: f64 = members.iter().map(|v| (v - mean) * (v - mean)).sum();
        within += ss / (n - 1.0);
    }
    if within > 0.0 {
        Ok(between / within)
    } else if between > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(0.0)
    }
}

/// Score every column of a feature matrix (rows are samples).
pub fn fscore_columns(features: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let dim = features.first().map_or(0, |f| f.len());
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::BadParameter("feature dimensions differ".into()));
    }
    let mut column = vec![0.0; features.len()];
    (0..dim)
        .map(|j| {
            for (dst, row) in column.iter_mut().zip(features) {
                *dst = row[j];
            }
            fscore(&column, labels)
        })
        .collect()
}

/// Keep the `ceil(keep_fraction * len)` highest-scoring features. Ties are
/// broken toward the lower index so the selection is reproducible.
pub fn select_features(scores: &[f64], keep_fraction: f64) -> Result<Vec<bool>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::BadParameter(format!(
            "keep fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::BadParameter("no scores to select from".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::BadParameter("NaN feature score".into()));
    }
    let keep = (keep_fraction * scores.len() as f64).ceil() as usize;
    let keep = keep.clamp(1, scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut mask = vec![false; scores.len()];
    for &i in order.iter().take(keep) {
        mask[i] = true;
    }
    Ok(mask)
}

/// Keep every feature scoring strictly above `threshold`. The fallback when
/// nothing clears the bar is the single best feature, mirroring the floor in
/// [`select_features`].
pub fn select_by_threshold(scores: &[f64], threshold: f64) -> Result<Vec<bool>> {
    if threshold.is_nan() {
        return Err(Error::BadParameter("threshold is NaN".into()));
    }
    if scores.is_empty() {
        return Err(Error::BadParameter("no scores to select from".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::BadParameter("NaN feature score".into()));
    }
    let mut mask: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    if mask.iter().all(|&m| !m) {
        let best = (0..scores.len())
            .max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(b.cmp(&a)))
            .expect("non-empty scores");
        mask[best] = true;
    }
    Ok(mask)
}
