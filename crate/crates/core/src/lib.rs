//! Least-squares slicing adversarial training for neural vocoders.

pub mod cli;
pub mod dsp;
pub mod error;
pub mod grad;
pub mod metrics;
pub mod nets;
pub mod objectives;
pub mod slice_demo;
pub mod trainer;

pub use error::{Error, Result};
pub use grad::{stop_gradient, Tensor};
