//! R-function families, adversarial objectives, feature-matching and mel losses.

mod family;
mod losses;

pub use family::{r_eval, Objective, RFamily, Which};
pub use losses::{
    d_total, discriminator_loss, feature_matching, fm_distance, g_total, generator_loss, j_gan, j_logits, j_san,
    mel_loss, mel_loss_batch, v_gan, v_gan_logits, v_san, v_san_logits, DiscriminatorLoss, GeneratorLoss, LossWeights,
};
