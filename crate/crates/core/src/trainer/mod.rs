//! Synthetic data, Adam, checkpoints and the alternating training loop.

mod adam;
pub mod checkpoint;
mod config;
mod data;
mod train;

pub use adam::{adam_step, Adam, ADAM_EPS};
pub use config::{DatasetSpec, OptimConfig, TrainConfig};
pub use data::{synth_dataset, Clip, PEAK};
pub use train::{
    checkpoint_load, checkpoint_save, latest_checkpoint, mel_window, synthesize, train, Batch, StepLog, TrainState,
    Trainer, LOG_HEADER, SCALES_HEADER,
};
