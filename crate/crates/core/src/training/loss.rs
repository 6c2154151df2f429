use crate::error::{Error, Result};
use crate::geometry::{NormPair, Shape};

/// Mean over coordinates of `max(|e| − w, 0)` for already-normalized
/// coordinate errors `e`.
pub fn rectified_l1_values(errors: &[f64], w: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|e| (e.abs() - w).max(0.0)).sum::<f64>() / errors.len() as f64
}

/// Gradient of [`rectified_l1_values`] w.r.t. each error (zero inside the
/// dead zone).
pub fn rectified_l1_grad(errors: &[f64], w: f64) -> Vec<f64> {
    let scale = 1.0 / errors.len().max(1) as f64;
    errors
        .iter()
        .map(|&e| if e.abs() > w { e.signum() * scale } else { 0.0 })
        .collect()
}

/// Coordinate errors `(pred − gt)` in percent of the ground truth's
/// normalization distance, interleaved x, y.
pub fn normalized_errors(pred: &Shape, gt: &Shape, norm: &NormPair) -> Result<Vec<f64>> {
    if pred.len() != gt.len() || pred.frame != gt.frame {
        return Err(Error::config(
            "prediction and ground truth differ in size or frame",
        ));
    }
    let k = 100.0 / norm.distance(gt)?;
    Ok(pred
        .points
        .iter()
        .zip(&gt.points)
        .flat_map(|(p, g)| [k * (p.x - g.x), k * (p.y - g.y)])
        .collect())
}

/// Rectified L1 between two shapes in NME-percent units.
pub fn rectified_l1(pred: &Shape, gt: &Shape, w: f64, norm: &NormPair) -> Result<f64> {
    Ok(rectified_l1_values(&normalized_errors(pred, gt, norm)?, w))
}

pub fn error_loss(predicted: f64, actual: f64) -> f64 {
    (predicted - actual).abs()
}

/// Subgradient of [`error_loss`] w.r.t. the prediction (0 at the kink).
pub fn error_loss_grad(predicted: f64, actual: f64) -> f64 {
    let d = predicted - actual;
    if d == 0.0 {
        0.0
    } else {
        d.signum()
    }
}

/// Spearman rank correlation (average ranks for ties). `None` when either
/// side is constant or fewer than two pairs are given.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&ranks(a), &ranks(b))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0 + 1.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}
