//! Single-task and multi-task autoencoders.

mod backprop;
mod checkpoint;
mod loss;
mod model;
mod train;

pub use backprop::{gradients, objective, sgd_step, Gradients};
pub use checkpoint::{load_autoencoder, save_autoencoder};
pub use loss::{corrupt_zero_mask, reconstruction_loss, LossKind};
pub use model::{init_range, ModelParams};
pub use train::{
    train_mtae, train_single_task, EarlyStop, EpochStats, TrainConfig, TrainTrace,
};
