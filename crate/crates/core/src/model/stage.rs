//! One cascade iteration, batched over samples:
//!
//! ```text
//! patches ─ conv1 ─ relu ─ pool ─ conv2 ─ relu ─┬─ center crop ─┐
//!                                               └─ max-pool ────┴─ f (d)
//! a = sigmoid(W_a f + b_a),  g = a ⊙ f
//! h = tanh(W_r [g_1 … g_M, h_prev] + b_r)
//! Δ = W_l h + b_l,  E = W_e h + b_e
//! ```

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::config::ModelConfig;
use super::params::StageParams;
use crate::error::{Error, Result};
use crate::geometry::{crop_patch_into, Plane, Shape};
use crate::numerics::{
    dense_backward, dense_forward, maxpool2_backward, maxpool2_forward, Activation, Chain,
    ConvLayer, DenseLayer, MmaLedger, Op, OpGrad, PoolIndices, Tape, Tensor3, TensorBatch,
};

/// Per-sample input of a stage: the pyramid level it crops from and the
/// current shape in that level's frame.
#[derive(Clone, Copy, Debug)]
pub struct StageInput<'a> {
    pub level: &'a Plane,
    pub shape: &'a Shape,
}

/// Batched stage outputs; every buffer is row-major with one row per sample
/// (attention: one row per sample and patch).
#[derive(Clone, Debug)]
pub struct StageOutput {
    pub rows: usize,
    /// `rows × 2N`, normalized by the output level width.
    pub delta: Vec<f64>,
    /// Unclamped error-head output, one per sample.
    pub error: Vec<f64>,
    /// `rows × H`.
    pub hidden: Vec<f64>,
    /// `(rows · M) × d` sigmoid weights.
    pub attention: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug)]
pub struct StageCache {
    rows: usize,
    trunk: Tape,
    conv_map: TensorBatch,
    pool: PoolIndices,
    features: Vec<f64>,
    recurrent_in: Vec<f64>,
}

impl StageCache {
    /// Identifies the active relu/pooling pattern of the recorded pass.
    pub fn kink_signature(&self, params: &StageParams) -> u64 {
        let mut hasher = DefaultHasher::new();
        trunk(params).kink_signature(&self.trunk).hash(&mut hasher);
        self.pool.argmax.hash(&mut hasher);
        hasher.finish()
    }
}

fn trunk(params: &StageParams) -> Chain<'_> {
    Chain::new(vec![
        Op::Conv(&params.conv1),
        Op::Act(Activation::Relu),
        Op::MaxPool2,
        Op::Conv(&params.conv2),
        Op::Act(Activation::Relu),
    ])
}

/// Crops all patches of all samples into one `(rows·M) × p × p × 1` batch.
pub fn crop_batch(config: &ModelConfig, inputs: &[StageInput<'_>]) -> Result<TensorBatch> {
    let p = config.patch_size;
    let m = config.patches();
    let mut batch = TensorBatch::zeros(inputs.len() * m, p, p, 1);
    for (b, input) in inputs.iter().enumerate() {
        if input.shape.len() != config.landmarks {
            return Err(Error::config(format!(
                "shape has {} landmarks, model expects {}",
                input.shape.len(),
                config.landmarks
            )));
        }
        for (j, &idx) in config.patch_indices.iter().enumerate() {
            crop_patch_into(
                input.level,
                input.shape.points[idx],
                p,
                batch.item_mut(b * m + j),
            );
        }
    }
    Ok(batch)
}

/// Splits a `side × side × c` map batch into its central `side/2` crop and
/// its 2×2 max-pool, concatenated per item.
fn descriptor(map: &TensorBatch) -> Result<(Vec<f64>, PoolIndices)> {
    let (side, c) = (map.height, map.channels);
    let half = side / 2;
    let start = side / 4;
    let (pooled, idx) = maxpool2_forward(map)?;
    let crop_len = half * half * c;
    let mut out = Vec::with_capacity(map.n * (crop_len + pooled.item_len()));
    for i in 0..map.n {
        let item = map.item(i);
        for y in start..start + half {
            let row = (y * side + start) * c;
            out.extend_from_slice(&item[row..row + half * c]);
        }
        out.extend_from_slice(pooled.item(i));
    }
    Ok((out, idx))
}

fn descriptor_backward(
    map_dims: &TensorBatch,
    pool: &PoolIndices,
    d_features: &[f64],
) -> Result<TensorBatch> {
    let (side, c) = (map_dims.height, map_dims.channels);
    let half = side / 2;
    let start = side / 4;
    let crop_len = half * half * c;
    let pooled_len = (side / 2) * (side / 2) * c;
    let d = crop_len + pooled_len;
    let mut d_pooled = Vec::with_capacity(map_dims.n * pooled_len);
    for i in 0..map_dims.n {
        d_pooled.extend_from_slice(&d_features[i * d + crop_len..(i + 1) * d]);
    }
    let d_pooled = TensorBatch::new(map_dims.n, side / 2, side / 2, c, d_pooled)?;
    let mut d_map = maxpool2_backward(&d_pooled, pool);
    for i in 0..map_dims.n {
        let src = &d_features[i * d..i * d + crop_len];
        let item = d_map.item_mut(i);
        for (r, y) in (start..start + half).enumerate() {
            let row = (y * side + start) * c;
            for (dst, &g) in item[row..row + half * c]
                .iter_mut()
                .zip(&src[r * half * c..(r + 1) * half * c])
            {
                *dst += g;
            }
        }
    }
    Ok(d_map)
}

/// Extracts `rows × d` descriptors from a batch of patches.
pub fn extract_features(
    params: &StageParams,
    patches: TensorBatch,
    ledger: &mut MmaLedger,
) -> Result<(Vec<f64>, Tape, TensorBatch, PoolIndices)> {
    let mut tape = Tape::new();
    let map = trunk(params).forward(patches, ledger, &mut tape)?;
    let (features, pool) = descriptor(&map)?;
    Ok((features, tape, map, pool))
}

/// Descriptor of a single `p × p × 1` patch.
pub fn extract_patch_feature(
    patch: &Tensor3,
    conv1: &ConvLayer,
    conv2: &ConvLayer,
    ledger: &mut MmaLedger,
) -> Result<Vec<f64>> {
    if patch.channels != 1 || patch.height != patch.width || patch.height != 14 {
        return Err(Error::Config(format!(
            "expected a 14x14x1 patch, got {}x{}x{}",
            patch.height, patch.width, patch.channels
        )));
    }
    let chain = Chain::new(vec![
        Op::Conv(conv1),
        Op::Act(Activation::Relu),
        Op::MaxPool2,
        Op::Conv(conv2),
        Op::Act(Activation::Relu),
    ]);
    let map = chain.forward(TensorBatch::from(patch), ledger, &mut Tape::new())?;
    Ok(descriptor(&map)?.0)
}

/// Gates `rows` descriptors with `sigmoid(W f + b)`; returns
/// `(weighted, weights)`.
pub fn local_patch_attention_batch(
    features: &[f64],
    rows: usize,
    layer: &DenseLayer,
    ledger: &mut MmaLedger,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut weights = dense_forward(features, rows, layer, ledger)?;
    Activation::Sigmoid.apply_in_place(&mut weights);
    let weighted = features.iter().zip(&weights).map(|(f, a)| f * a).collect();
    Ok((weighted, weights))
}

pub fn local_patch_attention(
    feature: &[f64],
    layer: &DenseLayer,
    ledger: &mut MmaLedger,
) -> Result<(Vec<f64>, Vec<f64>)> {
    local_patch_attention_batch(feature, 1, layer, ledger)
}

/// Forward pass of one stage for a batch of samples.
///
/// `h_prev` is `inputs.len() × H`. With `keep_cache` the activations needed
/// by [`stage_backward`] are returned as well.
pub fn stage_forward(
    params: &StageParams,
    config: &ModelConfig,
    inputs: &[StageInput<'_>],
    h_prev: &[f64],
    ledger: &mut MmaLedger,
    keep_cache: bool,
) -> Result<(StageOutput, Option<StageCache>)> {
    let rows = inputs.len();
    let m = config.patches();
    let d = config.descriptor_dim();
    let hdim = config.hidden;
    if h_prev.len() != rows * hdim {
        return Err(Error::config(format!(
            "previous hidden state has {} values, expected {rows}×{hdim}",
            h_prev.len()
        )));
    }
    let patches = crop_batch(config, inputs)?;
    let (features, trunk_tape, conv_map, pool) = extract_features(params, patches, ledger)?;
    if features.len() != rows * m * d {
        return Err(Error::config("descriptor length does not match configuration"));
    }

    let (weighted, attention) =
        local_patch_attention_batch(&features, rows * m, &params.attention, ledger)?;

    let rec_dim = m * d + hdim;
    let mut recurrent_in = Vec::with_capacity(rows * rec_dim);
    for b in 0..rows {
        recurrent_in.extend_from_slice(&weighted[b * m * d..(b + 1) * m * d]);
        recurrent_in.extend_from_slice(&h_prev[b * hdim..(b + 1) * hdim]);
    }
    let mut hidden = dense_forward(&recurrent_in, rows, &params.recurrent, ledger)?;
    Activation::Tanh.apply_in_place(&mut hidden);
    let delta = dense_forward(&hidden, rows, &params.landmark, ledger)?;
    let error = dense_forward(&hidden, rows, &params.error, ledger)?;

    let cache = keep_cache.then(|| StageCache {
        rows,
        trunk: trunk_tape,
        conv_map,
        pool,
        features,
        recurrent_in,
    });
    Ok((
        StageOutput {
            rows,
            delta,
            error,
            hidden,
            attention,
        },
        cache,
    ))
}

/// Back-propagates through one stage.
///
/// Upstream gradients are w.r.t. the normalized displacement (`rows × 2N`),
/// the raw error output (`rows`) and the hidden state (`rows × H`, from the
/// next iteration). Parameter gradients are accumulated into `grad`; the
/// gradient w.r.t. `h_prev` is returned.
#[allow(clippy::too_many_arguments)]
pub fn stage_backward(
    params: &StageParams,
    config: &ModelConfig,
    cache: &StageCache,
    output: &StageOutput,
    d_delta: &[f64],
    d_error: &[f64],
    d_hidden: &[f64],
    grad: &mut StageParams,
) -> Result<Vec<f64>> {
    let rows = cache.rows;
    let m = config.patches();
    let d = config.descriptor_dim();
    let hdim = config.hidden;
    if d_delta.len() != rows * 2 * config.landmarks
        || d_error.len() != rows
        || d_hidden.len() != rows * hdim
    {
        return Err(Error::Usage(
            "upstream gradients do not match the recorded forward pass".into(),
        ));
    }

    let dh_l = dense_backward(
        &output.hidden,
        rows,
        &params.landmark,
        d_delta,
        &mut grad.landmark,
        true,
    )
    .expect("requested");
    let dh_e = dense_backward(
        &output.hidden,
        rows,
        &params.error,
        d_error,
        &mut grad.error,
        true,
    )
    .expect("requested");
    let mut d_pre: Vec<f64> = d_hidden
        .iter()
        .zip(&dh_l)
        .zip(&dh_e)
        .map(|((a, b), c)| a + b + c)
        .collect();
    Activation::Tanh.backward_in_place(&output.hidden, &mut d_pre);

    let d_rec = dense_backward(
        &cache.recurrent_in,
        rows,
        &params.recurrent,
        &d_pre,
        &mut grad.recurrent,
        true,
    )
    .expect("requested");
    let rec_dim = m * d + hdim;
    let mut d_h_prev = Vec::with_capacity(rows * hdim);
    let mut d_weighted = Vec::with_capacity(rows * m * d);
    for row in d_rec.chunks_exact(rec_dim) {
        d_weighted.extend_from_slice(&row[..m * d]);
        d_h_prev.extend_from_slice(&row[m * d..]);
    }

    // g = a ⊙ f with a = sigmoid(W_a f + b_a)
    let mut d_features: Vec<f64> = d_weighted
        .iter()
        .zip(&output.attention)
        .map(|(g, a)| g * a)
        .collect();
    let mut d_att_pre: Vec<f64> = d_weighted
        .iter()
        .zip(&cache.features)
        .map(|(g, f)| g * f)
        .collect();
    Activation::Sigmoid.backward_in_place(&output.attention, &mut d_att_pre);
    let d_f_att = dense_backward(
        &cache.features,
        rows * m,
        &params.attention,
        &d_att_pre,
        &mut grad.attention,
        true,
    )
    .expect("requested");
    for (a, b) in d_features.iter_mut().zip(&d_f_att) {
        *a += b;
    }

    let d_map = descriptor_backward(&cache.conv_map, &cache.pool, &d_features)?;
    let grads = trunk(params).backward(&cache.trunk, d_map, false)?;
    for (slot, op_grad) in [0usize, 3].into_iter().zip([&grads.ops[0], &grads.ops[3]]) {
        let target = if slot == 0 {
            &mut grad.conv1
        } else {
            &mut grad.conv2
        };
        if let OpGrad::Conv(g) = op_grad {
            for (t, v) in target.weights.iter_mut().zip(&g.weights) {
                *t += v;
            }
            for (t, v) in target.bias.iter_mut().zip(&g.bias) {
                *t += v;
            }
        }
    }
    Ok(d_h_prev)
}
