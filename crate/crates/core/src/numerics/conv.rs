use rand::Rng;

use super::gemm;
use super::ledger::{MmaKind, MmaLedger};
use super::tensor::{Tensor3, TensorBatch};
use crate::error::{Error, Result};

/// Square "valid" convolution. Weights are stored as `(out, ky, kx, in)`,
/// i.e. one row of `kernel² · in_channels` values per output channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(kernel_size: usize, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kernel_size,
            in_channels,
            out_channels,
            weights: vec![0.0; kernel_size * kernel_size * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// He-style uniform weights in `±sqrt(6 / fan_in)`, zero bias.
    pub fn fan_in_uniform<R: Rng + ?Sized>(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = kernel_size * kernel_size * in_channels;
        let limit = (6.0 / fan_in as f64).sqrt();
        let weights = (0..fan_in * out_channels)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            kernel_size,
            in_channels,
            out_channels,
            weights,
            bias: vec![0.0; out_channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let want = self.kernel_size * self.kernel_size * self.in_channels * self.out_channels;
        if self.weights.len() != want || self.bias.len() != self.out_channels {
            return Err(Error::config(format!(
                "conv layer {k}x{k}x{}→{} has {} weights (want {want}) and {} biases",
                self.in_channels,
                self.out_channels,
                self.weights.len(),
                self.bias.len(),
                k = self.kernel_size,
            )));
        }
        Ok(())
    }

    #[inline]
    fn patch_len(&self) -> usize {
        self.kernel_size * self.kernel_size * self.in_channels
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Multiply-adds for one `height × width` input map.
    pub fn mma_for_input(&self, height: usize, width: usize) -> u64 {
        let oh = height + 1 - self.kernel_size;
        let ow = width + 1 - self.kernel_size;
        (oh * ow * self.out_channels * self.patch_len()) as u64
    }

    fn check_input(&self, input: &TensorBatch) -> Result<()> {
        if input.channels != self.in_channels
            || input.height < self.kernel_size
            || input.width < self.kernel_size
        {
            return Err(Error::config(format!(
                "conv {k}x{k}x{} cannot consume a {}x{}x{} input",
                self.in_channels,
                input.height,
                input.width,
                input.channels,
                k = self.kernel_size
            )));
        }
        Ok(())
    }
}

fn im2col(input: &TensorBatch, k: usize) -> Vec<f64> {
    let (h, w, c) = (input.height, input.width, input.channels);
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut cols = Vec::with_capacity(input.n * oh * ow * k * k * c);
    for item in input.data.chunks_exact(h * w * c) {
        for y in 0..oh {
            for x in 0..ow {
                for ky in 0..k {
                    let start = ((y + ky) * w + x) * c;
                    cols.extend_from_slice(&item[start..start + k * c]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], n: usize, h: usize, w: usize, c: usize, k: usize) -> TensorBatch {
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut out = TensorBatch::zeros(n, h, w, c);
    let patch = k * k * c;
    for (item, item_cols) in out
        .data
        .chunks_exact_mut(h * w * c)
        .zip(cols.chunks_exact(oh * ow * patch))
    {
        for y in 0..oh {
            for x in 0..ow {
                let col = &item_cols[(y * ow + x) * patch..(y * ow + x + 1) * patch];
                for ky in 0..k {
                    let start = ((y + ky) * w + x) * c;
                    for (dst, &src) in item[start..start + k * c]
                        .iter_mut()
                        .zip(&col[ky * k * c..(ky + 1) * k * c])
                    {
                        *dst += src;
                    }
                }
            }
        }
    }
    out
}

pub fn conv2d_forward(
    input: &TensorBatch,
    layer: &ConvLayer,
    ledger: &mut MmaLedger,
) -> Result<TensorBatch> {
    layer.check_input(input)?;
    let k = layer.kernel_size;
    let (oh, ow) = (input.height + 1 - k, input.width + 1 - k);
    let rows = input.n * oh * ow;
    let cols = im2col(input, k);
    let mut out = Vec::with_capacity(rows * layer.out_channels);
    for _ in 0..rows {
        out.extend_from_slice(&layer.bias);
    }
    gemm(
        rows,
        layer.patch_len(),
        layer.out_channels,
        &cols,
        false,
        &layer.weights,
        true,
        1.0,
        &mut out,
    );
    ledger.add(
        MmaKind::Conv,
        input.n as u64 * layer.mma_for_input(input.height, input.width),
    );
    TensorBatch::new(input.n, oh, ow, layer.out_channels, out)
}

/// Accumulates weight/bias gradients into `grad`; returns `dL/dinput` on request.
pub fn conv2d_backward(
    input: &TensorBatch,
    layer: &ConvLayer,
    upstream: &TensorBatch,
    grad: &mut ConvLayer,
    need_input_grad: bool,
) -> Option<TensorBatch> {
    let k = layer.kernel_size;
    let rows = upstream.n * upstream.height * upstream.width;
    debug_assert_eq!(upstream.channels, layer.out_channels);
    let cols = im2col(input, k);
    gemm(
        layer.out_channels,
        rows,
        layer.patch_len(),
        &upstream.data,
        true,
        &cols,
        false,
        1.0,
        &mut grad.weights,
    );
    for row in upstream.data.chunks_exact(layer.out_channels) {
        for (b, &g) in grad.bias.iter_mut().zip(row) {
            *b += g;
        }
    }
    need_input_grad.then(|| {
        let mut dcols = vec![0.0; rows * layer.patch_len()];
        gemm(
            rows,
            layer.out_channels,
            layer.patch_len(),
            &upstream.data,
            false,
            &layer.weights,
            false,
            0.0,
            &mut dcols,
        );
        col2im(
            &dcols,
            input.n,
            input.height,
            input.width,
            input.channels,
            k,
        )
    })
}

/// Single-map valid convolution.
pub fn conv2d_valid(input: &Tensor3, layer: &ConvLayer, ledger: &mut MmaLedger) -> Result<Tensor3> {
    conv2d_forward(&TensorBatch::from(input), layer, ledger)?.into_single()
}
