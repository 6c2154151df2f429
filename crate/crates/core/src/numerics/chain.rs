use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::activation::Activation;
use super::conv::{conv2d_backward, conv2d_forward, ConvLayer};
use super::dense::{dense_backward, dense_forward, DenseLayer};
use super::ledger::MmaLedger;
use super::pool::{maxpool2_backward, maxpool2_forward, PoolIndices};
use super::tensor::TensorBatch;
use crate::error::{Error, Result};

/// One step of a feed-forward chain. Layers are borrowed so the same
/// parameters can be reused by several chains.
#[derive(Clone, Copy, Debug)]
pub enum Op<'a> {
    Conv(&'a ConvLayer),
    /// Flattens each item before applying the layer; output is `1 × 1 × out_dim`.
    Dense(&'a DenseLayer),
    Act(Activation),
    MaxPool2,
}

#[derive(Debug)]
enum Saved {
    Input(TensorBatch),
    Output(TensorBatch),
    Pool(PoolIndices),
}

/// Activations recorded by [`Chain::forward`], consumed by [`Chain::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    saved: Vec<Saved>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.saved.is_empty()
    }

    pub fn clear(&mut self) {
        self.saved.clear();
    }
}

/// Gradient for one op of the chain; parameter-free ops yield `None`.
#[derive(Clone, Debug, PartialEq)]
pub enum OpGrad {
    Conv(ConvLayer),
    Dense(DenseLayer),
    None,
}

#[derive(Clone, Debug)]
pub struct ChainGrads {
    pub ops: Vec<OpGrad>,
    pub input: Option<TensorBatch>,
}

/// A linear sequence of ops with explicit per-op gradients.
#[derive(Clone, Debug)]
pub struct Chain<'a> {
    ops: Vec<Op<'a>>,
}

impl<'a> Chain<'a> {
    pub fn new(ops: Vec<Op<'a>>) -> Self {
        Self { ops }
    }

    pub fn ops(&self) -> &[Op<'a>] {
        &self.ops
    }

    /// Hash of the piecewise-linear state recorded in `tape`: which relu
    /// units are active and which cell won each pooling window.
    pub fn kink_signature(&self, tape: &Tape) -> u64 {
        let mut hasher = DefaultHasher::new();
        for (op, saved) in self.ops.iter().zip(&tape.saved) {
            match (op, saved) {
                (Op::Act(Activation::Relu), Saved::Output(y)) => {
                    for v in &y.data {
                        (*v > 0.0).hash(&mut hasher);
                    }
                }
                (Op::MaxPool2, Saved::Pool(idx)) => idx.argmax.hash(&mut hasher),
                _ => {}
            }
        }
        hasher.finish()
    }

    /// Runs the chain and records what the backward pass needs into `tape`
    /// (which is cleared first).
    pub fn forward(
        &self,
        input: TensorBatch,
        ledger: &mut MmaLedger,
        tape: &mut Tape,
    ) -> Result<TensorBatch> {
        tape.clear();
        let mut x = input;
        for op in &self.ops {
            x = match *op {
                Op::Conv(layer) => {
                    let y = conv2d_forward(&x, layer, ledger)?;
                    tape.saved.push(Saved::Input(x));
                    y
                }
                Op::Dense(layer) => {
                    let rows = x.n;
                    let y = dense_forward(&x.data, rows, layer, ledger)?;
                    tape.saved.push(Saved::Input(x));
                    TensorBatch::new(rows, 1, 1, layer.out_dim, y)?
                }
                Op::Act(kind) => {
                    kind.apply_in_place(&mut x.data);
                    tape.saved.push(Saved::Output(x.clone()));
                    x
                }
                Op::MaxPool2 => {
                    let (y, idx) = maxpool2_forward(&x)?;
                    tape.saved.push(Saved::Pool(idx));
                    y
                }
            };
        }
        Ok(x)
    }

    /// Back-propagates `upstream` (shaped like the chain output) through the
    /// recorded forward pass.
    pub fn backward(
        &self,
        tape: &Tape,
        upstream: TensorBatch,
        need_input_grad: bool,
    ) -> Result<ChainGrads> {
        if tape.saved.len() != self.ops.len() {
            return Err(Error::Usage(
                "backward called without a matching recorded forward pass".into(),
            ));
        }
        let mut grads = vec![OpGrad::None; self.ops.len()];
        let mut g = upstream;
        for (i, (op, saved)) in self.ops.iter().zip(&tape.saved).enumerate().rev() {
            let want_dx = need_input_grad || i > 0;
            g = match (*op, saved) {
                (Op::Conv(layer), Saved::Input(x)) => {
                    let mut grad = ConvLayer::zeros(
                        layer.kernel_size,
                        layer.in_channels,
                        layer.out_channels,
                    );
                    let dx = conv2d_backward(x, layer, &g, &mut grad, want_dx);
                    grads[i] = OpGrad::Conv(grad);
                    match dx {
                        Some(dx) => dx,
                        None => break,
                    }
                }
                (Op::Dense(layer), Saved::Input(x)) => {
                    let mut grad = DenseLayer::zeros(layer.in_dim, layer.out_dim);
                    let dx = dense_backward(&x.data, x.n, layer, &g.data, &mut grad, want_dx);
                    grads[i] = OpGrad::Dense(grad);
                    match dx {
                        Some(dx) => TensorBatch::new(x.n, x.height, x.width, x.channels, dx)?,
                        None => break,
                    }
                }
                (Op::Act(kind), Saved::Output(y)) => {
                    kind.backward_in_place(&y.data, &mut g.data);
                    g
                }
                (Op::MaxPool2, Saved::Pool(idx)) => maxpool2_backward(&g, idx),
                _ => {
                    return Err(Error::Usage(
                        "tape does not match the chain it is replayed on".into(),
                    ))
                }
            };
        }
        Ok(ChainGrads {
            ops: grads,
            input: need_input_grad.then_some(g),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_without_forward_is_usage_error() {
        let layer = DenseLayer::identity(2);
        let chain = Chain::new(vec![Op::Dense(&layer)]);
        let tape = Tape::new();
        let up = TensorBatch::zeros(1, 1, 1, 2);
        assert!(matches!(
            chain.backward(&tape, up, true),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn conv_pool_dense_chain_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c1 = ConvLayer::fan_in_uniform(3, 2, 3, &mut rng);
        let d1 = DenseLayer::fan_in_uniform(12, 4, 1.0, &mut rng);
        let chain = Chain::new(vec![
            Op::Conv(&c1),
            Op::Act(Activation::Tanh),
            Op::MaxPool2,
            Op::Dense(&d1),
            Op::Act(Activation::Sigmoid),
        ]);
        let x = TensorBatch::new(
            2,
            6,
            6,
            2,
            (0..144).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let coef: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |input: &TensorBatch| {
            let mut tape = Tape::new();
            let y = chain
                .forward(input.clone(), &mut MmaLedger::new(), &mut tape)
                .unwrap();
            y.data.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut tape = Tape::new();
        let y = chain
            .forward(x.clone(), &mut MmaLedger::new(), &mut tape)
            .unwrap();
        let up = TensorBatch::new(y.n, 1, 1, 4, coef.clone()).unwrap();
        let grads = chain.backward(&tape, up, true).unwrap();
        let dx = grads.input.unwrap();
        let h = 1e-5;
        for i in (0..x.data.len()).step_by(7) {
            let mut xp = x.clone();
            xp.data[i] += h;
            let mut xm = x.clone();
            xm.data[i] -= h;
            let numeric = (loss(&xp) - loss(&xm)) / (2.0 * h);
            assert!((numeric - dx.data[i]).abs() < 1e-7, "input {i}");
        }
        assert!(matches!(grads.ops[0], OpGrad::Conv(_)));
        assert!(matches!(grads.ops[3], OpGrad::Dense(_)));
    }
}
