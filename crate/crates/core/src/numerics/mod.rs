//! Dense numeric kernels with explicit forward and backward passes.
//!
//! Every kernel works on a batch so the hot loops reduce to a handful of
//! matrix products. Multiply-adds are tallied in an [`MmaLedger`]; additions,
//! activations and pooling are free.

mod activation;
mod chain;
mod conv;
mod dense;
mod gemm;
mod gradcheck;
mod ledger;
mod pool;
mod tensor;

pub use activation::{activation, Activation};
pub use chain::{Chain, ChainGrads, Op, OpGrad, Tape};
pub use conv::{conv2d_backward, conv2d_forward, conv2d_valid, ConvLayer};
pub use dense::{dense, dense_backward, dense_forward, DenseLayer};
pub use gradcheck::{
    grad_check, grad_check_indices, grad_check_sampled, relative_error, Differentiable, GradCheckReport, FD_STEP,
};
pub use ledger::{MmaKind, MmaLedger};
pub use pool::{maxpool2, maxpool2_backward, maxpool2_forward, PoolIndices};
pub use tensor::{Tensor3, TensorBatch};

pub(crate) use gemm::gemm;
