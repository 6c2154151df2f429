use rand::Rng;

use super::gemm;
use super::ledger::{MmaKind, MmaLedger};
use crate::error::{Error, Result};

/// Fully connected layer `y = W·x + b` with `W` stored row-major as `out_dim × in_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let layer = Self {
            in_dim,
            out_dim,
            weights,
            bias,
        };
        layer.validate()?;
        Ok(layer)
    }

    /// Uniform weights in `±sqrt(3 · gain / in_dim)`, zero bias.
    pub fn fan_in_uniform<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        gain: f64,
        rng: &mut R,
    ) -> Self {
        let limit = (3.0 * gain / in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut layer = Self::zeros(dim, dim);
        for i in 0..dim {
            layer.weights[i * dim + i] = 1.0;
        }
        layer
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.in_dim * self.out_dim || self.bias.len() != self.out_dim {
            return Err(Error::config(format!(
                "dense layer {}→{} has {} weights and {} biases",
                self.in_dim,
                self.out_dim,
                self.weights.len(),
                self.bias.len()
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn mma_per_item(&self) -> u64 {
        (self.in_dim * self.out_dim) as u64
    }
}

/// Batched forward pass over `rows` inputs laid out as `rows × in_dim`.
pub fn dense_forward(
    input: &[f64],
    rows: usize,
    layer: &DenseLayer,
    ledger: &mut MmaLedger,
) -> Result<Vec<f64>> {
    if input.len() != rows * layer.in_dim {
        return Err(Error::config(format!(
            "dense input has {} values, expected {rows}×{}",
            input.len(),
            layer.in_dim
        )));
    }
    let mut out = Vec::with_capacity(rows * layer.out_dim);
    for _ in 0..rows {
        out.extend_from_slice(&layer.bias);
    }
    gemm(
        rows,
        layer.in_dim,
        layer.out_dim,
        input,
        false,
        &layer.weights,
        true,
        1.0,
        &mut out,
    );
    ledger.add(MmaKind::Dense, rows as u64 * layer.mma_per_item());
    Ok(out)
}

/// Accumulates parameter gradients into `grad` and optionally returns `dL/dinput`.
pub fn dense_backward(
    input: &[f64],
    rows: usize,
    layer: &DenseLayer,
    upstream: &[f64],
    grad: &mut DenseLayer,
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    debug_assert_eq!(input.len(), rows * layer.in_dim);
    debug_assert_eq!(upstream.len(), rows * layer.out_dim);
    gemm(
        layer.out_dim,
        rows,
        layer.in_dim,
        upstream,
        true,
        input,
        false,
        1.0,
        &mut grad.weights,
    );
    for row in upstream.chunks_exact(layer.out_dim) {
        for (b, &g) in grad.bias.iter_mut().zip(row) {
            *b += g;
        }
    }
    need_input_grad.then(|| {
        let mut dx = vec![0.0; rows * layer.in_dim];
        gemm(
            rows,
            layer.out_dim,
            layer.in_dim,
            upstream,
            false,
            &layer.weights,
            false,
            0.0,
            &mut dx,
        );
        dx
    })
}

/// Single-vector forward pass.
pub fn dense(input: &[f64], layer: &DenseLayer, ledger: &mut MmaLedger) -> Result<Vec<f64>> {
    dense_forward(input, 1, layer, ledger)
}
