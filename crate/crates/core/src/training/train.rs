use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::augment::{augment, AugmentParams};
use super::balance::{expand_indices, gdb_weights, pdb_weights, BalanceMethod, GdbParams, PdbParams};
use super::loss::{error_loss, error_loss_grad, normalized_errors, rectified_l1_grad, rectified_l1_values, spearman};
use super::sample::Sample;
use crate::error::{Error, Result};
use crate::geometry::{mean_shape, nme, procrustes_align, shape_update, Point, Shape};
use crate::model::{
    init_params, run_cascade_batch, stage_backward, stage_forward, ModelConfig, ModelParams,
    StageInput, Thresholds,
};
use crate::numerics::MmaLedger;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fractions of the run after which the rate is multiplied by `decay_factor`.
    pub decay_points: Vec<f64>,
    pub decay_factor: f64,
    /// Rectification width, NME percent.
    pub rect_width: f64,
    /// Weight of the error-head loss.
    pub error_weight: f64,
    pub augment: AugmentParams,
    pub balance: Option<BalanceMethod>,
    pub gdb: GdbParams,
    pub pdb: PdbParams,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            decay_points: vec![0.6, 0.85],
            decay_factor: 0.3,
            rect_width: 0.2,
            error_weight: 1.0,
            augment: AugmentParams::default(),
            balance: None,
            gdb: GdbParams::default(),
            pdb: PdbParams::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.rect_width >= 0.0 && self.error_weight >= 0.0 && self.learning_rate >= 0.0) {
            return Err(Error::config(
                "rectification width, error weight and learning rate must be nonnegative",
            ));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let passed = self
            .decay_points
            .iter()
            .filter(|&&f| epoch >= (f * self.epochs as f64).floor() as usize)
            .count();
        self.learning_rate * self.decay_factor.powi(passed as i32)
    }
}

/// Per-epoch training summary; NMEs are per iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_nme: Vec<f64>,
    pub val_nme: Vec<f64>,
    /// Mean absolute error of the error head over all validation iterations.
    pub val_error_mae: f64,
    /// Rank correlation of predicted vs. true error at the last iteration.
    pub val_spearman: f64,
}

/// All-iterations evaluation of a model on a set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// NME of the mean-face initialization, per sample.
    pub initial_nme: Vec<f64>,
    /// `samples × L` true NME after each iteration.
    pub nme: Vec<Vec<f64>>,
    /// `samples × L` error-head output (clamped at zero).
    pub predicted: Vec<Vec<f64>>,
}

impl Evaluation {
    pub fn len(&self) -> usize {
        self.nme.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nme.is_empty()
    }

    pub fn mean_nme(&self, iteration: usize) -> f64 {
        mean(self.nme.iter().map(|r| r[iteration]))
    }

    pub fn mean_initial_nme(&self) -> f64 {
        mean(self.initial_nme.iter().copied())
    }

    pub fn error_mae(&self) -> f64 {
        mean(
            self.nme
                .iter()
                .zip(&self.predicted)
                .flat_map(|(t, p)| t.iter().zip(p).map(|(a, b)| (a - b).abs())),
        )
    }

    pub fn spearman_at(&self, iteration: usize) -> Option<f64> {
        let t: Vec<f64> = self.nme.iter().map(|r| r[iteration]).collect();
        let p: Vec<f64> = self.predicted.iter().map(|r| r[iteration]).collect();
        spearman(&p, &t)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

const EVAL_BATCH: usize = 32;

/// Runs every iteration (no early exit) and measures true and predicted error.
pub fn evaluate(model: &ModelParams, samples: &[Sample]) -> Result<Evaluation> {
    let config = &model.config;
    let mut out = Evaluation {
        initial_nme: Vec::with_capacity(samples.len()),
        nme: Vec::with_capacity(samples.len()),
        predicted: Vec::with_capacity(samples.len()),
    };
    for chunk in samples.chunks(EVAL_BATCH) {
        let pyramids = chunk
            .iter()
            .map(|s| {
                s.validate(config)?;
                s.pyramid(config)
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<_> = pyramids.iter().collect();
        let traces = run_cascade_batch(model, &refs, Thresholds::run_all(f64::INFINITY), false)?;
        for (s, trace) in chunk.iter().zip(traces) {
            out.initial_nme
                .push(nme(&model.mean_face, &s.gt.to_frame(0), &config.norm)?);
            let mut row = Vec::with_capacity(config.iterations);
            let mut pred = Vec::with_capacity(config.iterations);
            for r in &trace.records {
                let shape = &r.predicted_shape;
                row.push(nme(shape, &s.gt.to_frame(shape.frame), &config.norm)?);
                pred.push(r.predicted_error);
            }
            out.nme.push(row);
            out.predicted.push(pred);
        }
    }
    Ok(out)
}

/// Mean face for the level-0 frame: the generalized Procrustes mean, fitted
/// by a similarity onto the arithmetic average of the training shapes.
pub fn fit_mean_face(shapes: &[Shape]) -> Result<Shape> {
    let level0: Vec<Shape> = shapes.iter().map(|s| s.to_frame(0)).collect();
    let gpa = mean_shape(&level0, 10)?;
    let n = level0.len() as f64;
    let mut avg = vec![Point::default(); gpa.len()];
    for s in &level0 {
        for (a, p) in avg.iter_mut().zip(&s.points) {
            a.x += p.x / n;
            a.y += p.y / n;
        }
    }
    let avg = Shape::new(avg, 0)?;
    Ok(Shape {
        frame: 0,
        ..procrustes_align(&gpa, &avg)?.aligned
    })
}

/// Model before any update: mean face of `train` and `init_params(seed)`.
pub fn initial_model(train: &[Sample], config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    if train.is_empty() {
        return Err(Error::Usage("training set is empty".into()));
    }
    for s in train {
        s.validate(config)?;
    }
    let shapes: Vec<Shape> = train.iter().map(|s| s.gt.clone()).collect();
    init_params(seed, config.clone(), fit_mean_face(&shapes)?)
}

/// Loss and per-iteration NME sums of one batch.
#[derive(Clone, Debug, Default)]
pub struct BatchStats {
    pub loss: f64,
    pub nme_sums: Vec<f64>,
    pub samples: usize,
}

/// Forward and backward pass over all iterations for one batch; gradients
/// of the batch-mean loss are accumulated into `grads`.
pub fn batch_gradient(
    model: &ModelParams,
    batch: &[Sample],
    train: &TrainConfig,
    grads: &mut ModelParams,
) -> Result<BatchStats> {
    let config = &model.config;
    let b = batch.len();
    let levels = config.iterations;
    let two_n = 2 * config.landmarks;
    let hdim = config.hidden;
    let inv_b = 1.0 / b as f64;
    let pyramids = batch
        .iter()
        .map(|s| s.pyramid(config))
        .collect::<Result<Vec<_>>>()?;

    let mut stats = BatchStats {
        nme_sums: vec![0.0; levels],
        samples: b,
        ..Default::default()
    };
    let mut shapes = vec![model.mean_face.clone(); b];
    let mut h_prev = vec![0.0; b * hdim];
    let mut tapes = Vec::with_capacity(levels);
    let mut d_pred = Vec::with_capacity(levels);
    let mut d_err = Vec::with_capacity(levels);
    for (i, stage) in model.stages.iter().enumerate() {
        let inputs: Vec<StageInput<'_>> = (0..b)
            .map(|s| StageInput {
                level: pyramids[s].level(i),
                shape: &shapes[s],
            })
            .collect();
        let (out, cache) =
            stage_forward(stage, config, &inputs, &h_prev, &mut MmaLedger::new(), true)?;
        let frame = config.output_frame(i);
        let width = config.level_resolution(frame) as f64;
        let upscale = i + 1 < levels;
        let mut grad_shape = vec![0.0; b * two_n];
        let mut grad_err = vec![0.0; b];
        let mut next = Vec::with_capacity(b);
        for s in 0..b {
            let delta: Vec<Point> = out.delta[s * two_n..(s + 1) * two_n]
                .chunks_exact(2)
                .map(|c| Point::new(width * c[0], width * c[1]))
                .collect();
            let pred = shape_update(&shapes[s], &delta, upscale)?;
            let gt = batch[s].gt.to_frame(frame);
            let errors = normalized_errors(&pred, &gt, &config.norm)?;
            let to_pixels = 100.0 / config.norm.distance(&gt)?;
            for (dst, g) in grad_shape[s * two_n..(s + 1) * two_n]
                .iter_mut()
                .zip(rectified_l1_grad(&errors, train.rect_width))
            {
                *dst = g * to_pixels * inv_b;
            }
            let true_err = nme(&pred, &gt, &config.norm)?;
            let raw = out.error[s];
            grad_err[s] = train.error_weight * error_loss_grad(raw, true_err) * inv_b;
            stats.loss += (rectified_l1_values(&errors, train.rect_width)
                + train.error_weight * error_loss(raw, true_err))
                * inv_b;
            stats.nme_sums[i] += true_err;
            next.push(pred);
        }
        h_prev = out.hidden.clone();
        shapes = next;
        tapes.push((out, cache.expect("requested")));
        d_pred.push(grad_shape);
        d_err.push(grad_err);
    }
    if !stats.loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite training loss ({})",
            stats.loss
        )));
    }

    // Backward through iterations; shapes chain additively (×2 between levels).
    let mut d_shape_in = vec![0.0; b * two_n];
    let mut d_hidden = vec![0.0; b * hdim];
    for i in (0..levels).rev() {
        let (out, cache) = &tapes[i];
        let width = config.level_resolution(config.output_frame(i)) as f64;
        let scale = if i + 1 < levels { 2.0 } else { 1.0 };
        let total: Vec<f64> = d_pred[i]
            .iter()
            .zip(&d_shape_in)
            .map(|(a, b)| a + b)
            .collect();
        let d_delta: Vec<f64> = total.iter().map(|g| g * width).collect();
        d_hidden = stage_backward(
            &model.stages[i],
            config,
            cache,
            out,
            &d_delta,
            &d_err[i],
            &d_hidden,
            &mut grads.stages[i],
        )?;
        d_shape_in = total.into_iter().map(|g| g * scale).collect();
    }
    Ok(stats)
}

fn zero_grads(grads: &mut ModelParams) {
    for stage in &mut grads.stages {
        for t in stage.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Duplication counts for the configured balancing method (all ones when off).
pub fn balance_counts(train_set: &[Sample], train: &TrainConfig) -> Result<Vec<usize>> {
    let shapes: Vec<Shape> = train_set.iter().map(|s| s.gt.clone()).collect();
    Ok(match train.balance {
        None => vec![1; shapes.len()],
        Some(BalanceMethod::Gdb) => gdb_weights(&shapes, train.gdb)?.counts,
        Some(BalanceMethod::Pdb) => pdb_weights(&shapes, train.pdb)?.counts,
    })
}

/// End-to-end training of all iterations jointly. Every duplicate produced
/// by balancing is augmented independently each epoch.
pub fn train(
    train_set: &[Sample],
    val_set: &[Sample],
    config: &ModelConfig,
    train: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochRecord>)> {
    let model = initial_model(train_set, config, train.seed)?;
    train_model(model, train_set, val_set, train)
}

/// Continues training `model` (see [`train`]).
pub fn train_model(
    mut model: ModelParams,
    train_set: &[Sample],
    val_set: &[Sample],
    train: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochRecord>)> {
    train.validate()?;
    if train_set.is_empty() {
        return Err(Error::Usage("training set is empty".into()));
    }
    let levels = model.config.iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    rng.set_stream(1);
    let mut order = expand_indices(&balance_counts(train_set, train)?);
    let mut adam = Adam::new(&model);
    let mut grads = model.zeros_like();
    let mut history = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        let lr = train.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut nme_sums = vec![0.0; levels];
        let mut seen = 0usize;
        for (k, chunk) in order.chunks(train.batch_size).enumerate() {
            let batch: Vec<Sample> = chunk
                .iter()
                .map(|&i| augment(&train_set[i], &mut rng, &train.augment))
                .collect();
            zero_grads(&mut grads);
            let stats = batch_gradient(&model, &batch, train, &mut grads).map_err(|e| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("epoch {}, batch {}: {msg}", epoch + 1, k + 1))
                }
                other => other,
            })?;
            adam.update(&mut model, &grads, lr);
            loss += stats.loss * stats.samples as f64;
            for (a, s) in nme_sums.iter_mut().zip(&stats.nme_sums) {
                *a += s;
            }
            seen += stats.samples;
        }
        let val = evaluate(&model, val_set)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: loss / seen as f64,
            train_nme: nme_sums.iter().map(|s| s / seen as f64).collect(),
            val_nme: (0..levels).map(|i| val.mean_nme(i)).collect(),
            val_error_mae: val.error_mae(),
            val_spearman: val.spearman_at(levels - 1).unwrap_or(f64::NAN),
        };
        log::info!(
            "epoch {}: loss {:.4}, val NME {:?}, rank corr {:.3}",
            record.epoch,
            record.loss,
            record.val_nme,
            record.val_spearman
        );
        history.push(record);
    }
    Ok((model, history))
}

/// Writes the history as CSV (`epoch, loss, train_nme_i…, val_nme_i…,
/// val_error_mae, val_spearman`).
pub fn write_history_csv<W: Write>(history: &[EpochRecord], levels: usize, out: &mut W) -> std::io::Result<()> {
    let mut header = vec!["epoch".to_string(), "loss".to_string()];
    header.extend((1..=levels).map(|i| format!("train_nme_{i}")));
    header.extend((1..=levels).map(|i| format!("val_nme_{i}")));
    header.push("val_error_mae".into());
    header.push("val_spearman".into());
    writeln!(out, "{}", header.join(","))?;
    for r in history {
        let mut row = vec![r.epoch.to_string(), r.loss.to_string()];
        row.extend(r.train_nme.iter().map(f64::to_string));
        row.extend(r.val_nme.iter().map(f64::to_string));
        row.push(r.val_error_mae.to_string());
        row.push(r.val_spearman.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
