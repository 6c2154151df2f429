use super::params::ModelParams;
use super::stage::{stage_forward, StageInput};
use crate::error::{Error, Result};
use crate::geometry::{ImagePyramid, Point};
use crate::numerics::MmaLedger;

/// Mean first-iteration attention of one patch, located on the mean face.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchAttention {
    pub patch: usize,
    pub landmark: usize,
    pub position: Point,
    pub mean_attention: f64,
}

const BATCH: usize = 32;

/// Per-patch attention averaged over its `d` components and then over all
/// samples, measured at the first iteration (patches cropped around the mean face).
pub fn average_attention(model: &ModelParams, pyramids: &[&ImagePyramid]) -> Result<Vec<f64>> {
    if pyramids.is_empty() {
        return Err(Error::Usage("attention analysis needs at least one sample".into()));
    }
    let config = &model.config;
    let m = config.patches();
    let d = config.descriptor_dim();
    let mut sums = vec![0.0; m];
    for chunk in pyramids.chunks(BATCH) {
        let inputs: Vec<StageInput<'_>> = chunk
            .iter()
            .map(|p| StageInput {
                level: p.level(0),
                shape: &model.mean_face,
            })
            .collect();
        let h0 = vec![0.0; chunk.len() * config.hidden];
        let (out, _) = stage_forward(
            &model.stages[0],
            config,
            &inputs,
            &h0,
            &mut MmaLedger::new(),
            false,
        )?;
        for (row, weights) in out.attention.chunks_exact(d).enumerate() {
            sums[row % m] += weights.iter().sum::<f64>() / d as f64;
        }
    }
    let count = pyramids.len() as f64;
    Ok(sums.into_iter().map(|s| s / count).collect())
}

/// [`average_attention`] paired with mean-face patch positions (level 0).
pub fn attention_report(
    model: &ModelParams,
    pyramids: &[&ImagePyramid],
) -> Result<Vec<PatchAttention>> {
    let means = average_attention(model, pyramids)?;
    Ok(model
        .config
        .patch_indices
        .iter()
        .zip(means)
        .enumerate()
        .map(|(patch, (&landmark, mean_attention))| PatchAttention {
            patch,
            landmark,
            position: model.mean_face.points[landmark],
            mean_attention,
        })
        .collect())
}
