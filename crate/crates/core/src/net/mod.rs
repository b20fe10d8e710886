//! Feed-forward regressor with optional sparse evolutionary connectivity.

mod checkpoint;
mod config;
mod network;
mod srelu;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION,
};
pub use config::{NetError, NetworkConfig, MAX_SPARSE_PARAMS};
pub use network::{
    EvolveStats, ForwardPass, Gradients, Layer, ParamId, SparseNetwork, SreluParam, Standardizer,
};
pub use srelu::{Srelu, SreluGrad};
pub use train::{
    evaluate, finetune, fit, train_epoch, EpochRecord, FitOptions, FitReport, Samples,
    FINETUNE_LEARNING_RATE,
};
