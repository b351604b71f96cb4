//! Generator and sliced multi-scale discriminator.

mod activation;
mod discriminator;
mod generator;

pub use activation::{snake, snakebeta, ActivationKind};
pub use discriminator::{
    normalize_direction, DiscMode, DiscOutput, DiscriminatorBank, DiscriminatorConfig, SlicedDiscriminator, SplitOutput,
};
pub use generator::{Generator, GeneratorConfig, RESIDUAL_GAIN};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grad::Tensor;

/// Trainable tensors with stable, unique names (used by checkpoints and optimizers).
pub trait NamedParams {
    fn named_params(&self) -> Vec<(String, Tensor)>;

    fn params(&self) -> Vec<Tensor> {
        self.named_params().into_iter().map(|(_, t)| t).collect()
    }

    fn zero_grad(&self) {
        for (_, t) in self.named_params() {
            t.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.numel()).sum()
    }
}

pub(crate) fn init_normal<R: Rng>(shape: &[usize], std: f64, rng: &mut R) -> Result<Tensor> {
    let dist = Normal::new(0.0, std).map_err(|e| Error::invalid("init", e.to_string()))?;
    let n = shape.iter().product();
    Tensor::param((0..n).map(|_| dist.sample(rng)).collect(), shape)
}
