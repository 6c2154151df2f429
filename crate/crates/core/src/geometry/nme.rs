use super::shape::Shape;
use crate::error::{Error, Result};

/// Two landmark groups whose centroids define the normalizing distance
/// (e.g. the two eye contours for an inter-pupil proxy).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormPair {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl NormPair {
    pub fn new(left: Vec<usize>, right: Vec<usize>) -> Self {
        Self { left, right }
    }

    /// Inter-pupil proxy for the 68-point markup: centroids of the two
    /// 6-point eye contours.
    pub fn eyes68() -> Self {
        Self::new((36..42).collect(), (42..48).collect())
    }

    pub fn distance(&self, shape: &Shape) -> Result<f64> {
        if self.left.is_empty() || self.right.is_empty() {
            return Err(Error::config("normalization groups must be nonempty"));
        }
        if self
            .left
            .iter()
            .chain(&self.right)
            .any(|&i| i >= shape.len())
        {
            return Err(Error::config("normalization index out of range"));
        }
        let d = shape
            .centroid_of(&self.left)
            .dist(shape.centroid_of(&self.right));
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Domain(
                "normalization distance must be positive".into(),
            ));
        }
        Ok(d)
    }
}

/// Normalized mean error in percent: mean landmark distance divided by the
/// ground truth's normalization distance, times 100.
pub fn nme(pred: &Shape, gt: &Shape, norm: &NormPair) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::config(format!(
            "prediction has {} landmarks, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.frame != gt.frame {
        return Err(Error::config(format!(
            "prediction in frame {} but ground truth in frame {}",
            pred.frame, gt.frame
        )));
    }
    let d = norm.distance(gt)?;
    let total: f64 = pred
        .points
        .iter()
        .zip(&gt.points)
        .map(|(a, b)| a.dist(*b))
        .sum();
    Ok(100.0 * total / (pred.len() as f64 * d))
}
