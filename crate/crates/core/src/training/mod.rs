//! Losses, augmentation, data balancing and the end-to-end training loop.

mod adam;
mod augment;
mod balance;
mod loss;
mod sample;
mod train;

pub use adam::Adam;
pub use augment::{augment, box_size, AugmentParams, Augmentation};
pub use balance::{
    expand_indices, gdb_weights, histogram_counts, mahalanobis_distances, pdb_weights,
    BalanceMethod, BalanceReport, ComponentPolicy, GdbParams, PdbParams, ShapePca,
};
pub use loss::{
    error_loss, error_loss_grad, normalized_errors, rectified_l1, rectified_l1_grad,
    rectified_l1_values, spearman,
};
pub use sample::Sample;
pub use train::{
    balance_counts, batch_gradient, evaluate, fit_mean_face, initial_model, train, train_model,
    write_history_csv, EpochRecord, Evaluation, TrainConfig, BatchStats,
};
