use super::config::ModelConfig;
use super::mma::stage_mma;
use super::params::{ModelParams, StageParams};
use super::stage::{stage_forward, StageInput};
use crate::error::{Error, Result};
use crate::geometry::{shape_update, ImagePyramid, Plane, Point, Shape};
use crate::numerics::MmaLedger;

/// Early-exit and validity thresholds, both in NME percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub success: f64,
    pub failure: f64,
}

impl Thresholds {
    pub fn from_config(config: &ModelConfig) -> Self {
        Self {
            success: config.success_threshold,
            failure: config.failure_threshold,
        }
    }

    /// Never exits early; used to record every iteration.
    pub fn run_all(failure: f64) -> Self {
        Self {
            success: f64::NEG_INFINITY,
            failure,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub index: usize,
    pub predicted_shape: Shape,
    /// Error-head output clamped at zero (NME percent).
    pub predicted_error: f64,
    /// `M × d` attention weights, row per patch.
    pub attention: Vec<f64>,
    pub mma_spent: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeTrace {
    pub records: Vec<IterationRecord>,
    pub exit_iteration: usize,
    pub valid: bool,
    pub total_mma: u64,
}

impl CascadeTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("a trace has at least one record")
    }

    pub fn final_shape(&self) -> &Shape {
        &self.final_record().predicted_shape
    }
}

/// Result of a single iteration for one sample.
#[derive(Clone, Debug)]
pub struct IterationOutput {
    /// Pixel displacements in the output frame.
    pub delta: Vec<Point>,
    pub error: f64,
    pub hidden: Vec<f64>,
    pub record: IterationRecord,
}

fn pixel_delta(config: &ModelConfig, iteration: usize, normalized: &[f64]) -> Vec<Point> {
    let width = config.level_resolution(config.output_frame(iteration)) as f64;
    normalized
        .chunks_exact(2)
        .map(|c| Point::new(width * c[0], width * c[1]))
        .collect()
}

/// Runs stage `iteration` (0-based) on one sample and applies the shape update.
pub fn run_iteration(
    stage: &StageParams,
    level: &Plane,
    shape_in: &Shape,
    h_prev: &[f64],
    config: &ModelConfig,
    iteration: usize,
) -> Result<IterationOutput> {
    if shape_in.frame != iteration {
        return Err(Error::config(format!(
            "iteration {} expects a shape in frame {iteration}, got frame {}",
            iteration + 1,
            shape_in.frame
        )));
    }
    let mut ledger = MmaLedger::new();
    let (out, _) = stage_forward(
        stage,
        config,
        &[StageInput {
            level,
            shape: shape_in,
        }],
        h_prev,
        &mut ledger,
        false,
    )?;
    let delta = pixel_delta(config, iteration, &out.delta);
    let upscale = iteration + 1 < config.iterations;
    let predicted_shape = shape_update(shape_in, &delta, upscale)?;
    let error = out.error[0].max(0.0);
    Ok(IterationOutput {
        record: IterationRecord {
            index: iteration + 1,
            predicted_shape,
            predicted_error: error,
            attention: out.attention,
            mma_spent: ledger.total(),
        },
        delta,
        error,
        hidden: out.hidden,
    })
}

fn check_pyramid(config: &ModelConfig, pyramid: &ImagePyramid) -> Result<()> {
    if pyramid.len() < config.iterations {
        return Err(Error::config(format!(
            "pyramid has {} levels but the cascade runs {} iterations",
            pyramid.len(),
            config.iterations
        )));
    }
    Ok(())
}

/// Selective cascade on one sample: stops after the first iteration whose
/// predicted error is strictly below `thresholds.success`.
pub fn run_cascade(
    model: &ModelParams,
    pyramid: &ImagePyramid,
    init_shape: &Shape,
    thresholds: Thresholds,
) -> Result<CascadeTrace> {
    let config = &model.config;
    check_pyramid(config, pyramid)?;
    if init_shape.frame != 0 {
        return Err(Error::config("initial shape must be in the level-0 frame"));
    }
    let mut shape = init_shape.clone();
    let mut hidden = vec![0.0; config.hidden];
    let mut records = Vec::with_capacity(config.iterations);
    for (i, stage) in model.stages.iter().enumerate() {
        let out = run_iteration(stage, pyramid.level(i), &shape, &hidden, config, i)?;
        shape = out.record.predicted_shape.clone();
        hidden = out.hidden;
        let stop = out.error < thresholds.success;
        records.push(out.record);
        if stop {
            break;
        }
    }
    Ok(finish_trace(records, thresholds))
}

fn finish_trace(records: Vec<IterationRecord>, thresholds: Thresholds) -> CascadeTrace {
    let last = records.last().expect("at least one iteration");
    CascadeTrace {
        exit_iteration: records.len(),
        valid: last.predicted_error < thresholds.failure,
        total_mma: records.iter().map(|r| r.mma_spent).sum(),
        records,
    }
}

/// Batched equivalent of [`run_cascade`] starting every sample from the
/// model's mean face. Samples that exit drop out of later iterations.
/// Attention rows are only kept with `keep_attention`.
pub fn run_cascade_batch(
    model: &ModelParams,
    pyramids: &[&ImagePyramid],
    thresholds: Thresholds,
    keep_attention: bool,
) -> Result<Vec<CascadeTrace>> {
    let config = &model.config;
    for p in pyramids {
        check_pyramid(config, p)?;
    }
    let n = pyramids.len();
    let per_sample = stage_mma(config).total();
    let mut shapes = vec![model.mean_face.clone(); n];
    let mut hidden = vec![vec![0.0; config.hidden]; n];
    let mut records: Vec<Vec<IterationRecord>> = vec![Vec::new(); n];
    let mut active: Vec<usize> = (0..n).collect();
    for (i, stage) in model.stages.iter().enumerate() {
        if active.is_empty() {
            break;
        }
        let inputs: Vec<StageInput<'_>> = active
            .iter()
            .map(|&s| StageInput {
                level: pyramids[s].level(i),
                shape: &shapes[s],
            })
            .collect();
        let h_prev: Vec<f64> = active.iter().flat_map(|&s| hidden[s].iter().copied()).collect();
        let mut ledger = MmaLedger::new();
        let (out, _) = stage_forward(stage, config, &inputs, &h_prev, &mut ledger, false)?;
        debug_assert_eq!(ledger.total(), per_sample * active.len() as u64);
        let two_n = 2 * config.landmarks;
        let att_len = config.patches() * config.descriptor_dim();
        let upscale = i + 1 < config.iterations;
        let mut still = Vec::with_capacity(active.len());
        for (r, &s) in active.iter().enumerate() {
            let delta = pixel_delta(config, i, &out.delta[r * two_n..(r + 1) * two_n]);
            let next = shape_update(&shapes[s], &delta, upscale)?;
            let error = out.error[r].max(0.0);
            records[s].push(IterationRecord {
                index: i + 1,
                predicted_shape: next.clone(),
                predicted_error: error,
                attention: if keep_attention {
                    out.attention[r * att_len..(r + 1) * att_len].to_vec()
                } else {
                    Vec::new()
                },
                mma_spent: per_sample,
            });
            shapes[s] = next;
            hidden[s] = out.hidden[r * config.hidden..(r + 1) * config.hidden].to_vec();
            if error >= thresholds.success {
                still.push(s);
            }
        }
        active = still;
    }
    Ok(records
        .into_iter()
        .map(|r| finish_trace(r, thresholds))
        .collect())
}
