//! Two-layer LSTM regressor with explicit forward and backward passes, Adam
//! and a mini-batch training loop driven by a [`crate::losses::LossSpec`].

mod adam;
mod checkpoint;
mod layer;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};
pub use layer::{LayerCache, LayerGrads, LstmLayer};
pub use model::{
    DropoutMasks, ForwardCache, Gradients, LstmModel, Mode, ModelConfig, OutputActivation, BLOCK_NAMES,
};
pub use train::{train, TrainConfig, TrainOutcome, DEFAULT_CLIP_NORM};
