use super::family::{Objective, RFamily};
use crate::dsp::MelAnalyzer;
use crate::error::{Error, Result};
use crate::grad::{no_grad, Tensor};
use crate::nets::{DiscMode, DiscOutput, DiscriminatorBank};

/// Weights of the feature-matching and mel terms in the generator objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub fm: f64,
    pub mel: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { fm: 2.0, mel: 45.0 }
    }
}

impl LossWeights {
    pub fn new(fm: f64, mel: f64) -> Result<Self> {
        let w = Self { fm, mel };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fm", self.fm), ("mel", self.mel)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    "loss weights",
                    format!("{name} weight {v} must be finite and >= 0"),
                ));
            }
        }
        Ok(())
    }

    /// `adv + λ_FM·fm + λ_mel·mel`.
    pub fn combine(&self, adv: &Tensor, fm: &Tensor, mel: &Tensor) -> Result<Tensor> {
        adv.add(&fm.mul_scalar(self.fm))?.add(&mel.mul_scalar(self.mel))
    }
}

fn non_empty(op: &'static str, batch: &[Tensor]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid(op, "empty batch"));
    }
    Ok(())
}

fn add_all(terms: impl IntoIterator<Item = Tensor>) -> Result<Tensor> {
    let mut it = terms.into_iter();
    let first = it.next().ok_or_else(|| Error::invalid("sum", "nothing to add"))?;
    it.try_fold(first, |acc, t| acc.add(&t))
}

/// Mean of `f(t)` over the batch and all locations (items may differ in length).
fn batch_mean(items: &[Tensor], f: impl Fn(&Tensor) -> Tensor) -> Result<Tensor> {
    let total: usize = items.iter().map(Tensor::numel).sum();
    if total == 0 {
        return Err(Error::invalid("batch mean", "no logits"));
    }
    Ok(add_all(items.iter().map(|t| f(t).sum()))?.mul_scalar(1.0 / total as f64))
}

/// Per-scale logits `[scale][item]` from per-item bank outputs `[item][scale]`.
fn by_scale<T: Clone>(per_item: &[Vec<T>]) -> Vec<Vec<T>> {
    let scales = per_item.first().map_or(0, Vec::len);
    (0..scales)
        .map(|k| per_item.iter().map(|o| o[k].clone()).collect())
        .collect()
}

fn logits_of(outs: Vec<Vec<DiscOutput>>) -> ScaleLogits {
    by_scale(
        &outs
            .into_iter()
            .map(|o| o.into_iter().map(|d| d.logits).collect())
            .collect::<Vec<Vec<_>>>(),
    )
}

fn forward_batch(bank: &DiscriminatorBank, batch: &[Tensor], mode: DiscMode) -> Result<Vec<Vec<DiscOutput>>> {
    batch.iter().map(|x| bank.forward(x, mode)).collect()
}

/// `mean R₁(real) + mean R₂(fake)` on logits of one scale.
pub fn v_gan_logits(family: RFamily, real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    batch_mean(real, |z| family.r1(z))?.add(&batch_mean(fake, |z| family.r2(z))?)
}

/// SAN objective on one scale: R₁/R₂ on the ω-frozen logits, R₃ on the φ-frozen logits.
pub fn v_san_logits(
    family: RFamily,
    real_omega_frozen: &[Tensor],
    fake_omega_frozen: &[Tensor],
    real_phi_frozen: &[Tensor],
    fake_phi_frozen: &[Tensor],
) -> Result<Tensor> {
    family.require_san_valid()?;
    let gan_part = v_gan_logits(family, real_omega_frozen, fake_omega_frozen)?;
    let dir_part =
        batch_mean(fake_phi_frozen, |z| family.r3(z))?.sub(&batch_mean(real_phi_frozen, |z| family.r3(z))?)?;
    gan_part.add(&dir_part)
}

/// `mean R₃(fake)` on logits of one scale.
pub fn j_logits(family: RFamily, fake: &[Tensor]) -> Result<Tensor> {
    batch_mean(fake, |z| family.r3(z))
}

/// Discriminator value summed over scales; the discriminator maximizes it.
pub fn v_gan(bank: &DiscriminatorBank, real: &[Tensor], fake: &[Tensor], family: RFamily) -> Result<Tensor> {
    non_empty("v_gan", real)?;
    non_empty("v_gan", fake)?;
    let r = logits_of(forward_batch(bank, real, DiscMode::Plain)?);
    let f = logits_of(forward_batch(bank, fake, DiscMode::Plain)?);
    add_all(
        r.iter()
            .zip(&f)
            .map(|(rk, fk)| v_gan_logits(family, rk, fk))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Generator objective `Σ_k mean R₃(f_k(fake))`, gradients through every parameter.
pub fn j_gan(bank: &DiscriminatorBank, fake: &[Tensor], family: RFamily) -> Result<Tensor> {
    j_with_mode(bank, fake, family, DiscMode::Plain)
}

/// Same form as [`j_gan`]; used when the bank was trained with the SAN objective.
/// Rejects families whose `R₃` is not strictly decreasing.
pub fn j_san(bank: &DiscriminatorBank, fake: &[Tensor], family: RFamily) -> Result<Tensor> {
    family.require_san_valid()?;
    j_with_mode(bank, fake, family, DiscMode::Plain)
}

fn j_with_mode(bank: &DiscriminatorBank, fake: &[Tensor], family: RFamily, mode: DiscMode) -> Result<Tensor> {
    non_empty("j", fake)?;
    let f = logits_of(forward_batch(bank, fake, mode)?);
    add_all(f.iter().map(|fk| j_logits(family, fk)).collect::<Result<Vec<_>>>()?)
}

type ScaleLogits = Vec<Vec<Tensor>>;

/// ω-frozen and φ-frozen logits, each indexed `[scale][item]`.
fn split_logits(bank: &DiscriminatorBank, batch: &[Tensor]) -> Result<(ScaleLogits, ScaleLogits)> {
    let outs = batch
        .iter()
        .map(|x| bank.forward_split(x))
        .collect::<Result<Vec<_>>>()?;
    let of: ScaleLogits = outs
        .iter()
        .map(|o| o.iter().map(|s| s.omega_frozen.clone()).collect())
        .collect();
    let pf: ScaleLogits = outs
        .iter()
        .map(|o| o.iter().map(|s| s.phi_frozen.clone()).collect())
        .collect();
    Ok((by_scale(&of), by_scale(&pf)))
}

/// SAN value summed over scales. The same minibatch feeds both the
/// ω-frozen and φ-frozen terms.
pub fn v_san(bank: &DiscriminatorBank, real: &[Tensor], fake: &[Tensor], family: RFamily) -> Result<Tensor> {
    family.require_san_valid()?;
    non_empty("v_san", real)?;
    non_empty("v_san", fake)?;
    let (r_of, r_pf) = split_logits(bank, real)?;
    let (f_of, f_pf) = split_logits(bank, fake)?;
    add_all(
        (0..bank.scales())
            .map(|k| v_san_logits(family, &r_of[k], &f_of[k], &r_pf[k], &f_pf[k]))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// `Σ_layers mean |fake − real|` for one scale; `real` should already be detached.
pub fn fm_distance(real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    if real.len() != fake.len() {
        return Err(Error::invalid(
            "feature_matching",
            format!("{} real layers vs {} fake layers", real.len(), fake.len()),
        ));
    }
    add_all(
        real.iter()
            .zip(fake)
            .map(|(r, f)| Ok(f.sub(&r.detach())?.abs().mean()))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn real_features(bank: &DiscriminatorBank, real: &[Tensor]) -> Result<Vec<Vec<DiscOutput>>> {
    no_grad(|| forward_batch(bank, real, DiscMode::Frozen))
}

fn fm_from_outputs(real: &[Vec<DiscOutput>], fake: &[Vec<DiscOutput>]) -> Result<Tensor> {
    if real.len() != fake.len() {
        return Err(Error::invalid(
            "feature_matching",
            format!("{} real clips vs {} fake clips", real.len(), fake.len()),
        ));
    }
    let per_item = real
        .iter()
        .zip(fake)
        .map(|(r, f)| {
            add_all(
                r.iter()
                    .zip(f)
                    .map(|(rk, fk)| fm_distance(&rk.features, &fk.features))
                    .collect::<Result<Vec<_>>>()?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(add_all(per_item)?.mul_scalar(1.0 / real.len() as f64))
}

/// L1 between discriminator features of real and fake clips, summed over
/// layers and scales and averaged over the batch. Only the fake side carries
/// gradients, and only towards the input.
pub fn feature_matching(bank: &DiscriminatorBank, real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    non_empty("feature_matching", real)?;
    let r = real_features(bank, real)?;
    let f = forward_batch(bank, fake, DiscMode::Frozen)?;
    fm_from_outputs(&r, &f)
}

/// Mean absolute log-mel difference with the real side detached.
pub fn mel_loss(analyzer: &MelAnalyzer, real: &Tensor, fake: &Tensor) -> Result<Tensor> {
    if real.shape() != fake.shape() {
        return Err(Error::ShapeMismatch {
            op: "mel_loss",
            lhs: real.shape().to_vec(),
            rhs: fake.shape().to_vec(),
        });
    }
    let target = no_grad(|| analyzer.log_mel(&real.detach()))?;
    Ok(analyzer.log_mel(fake)?.sub(&target)?.abs().mean())
}

/// [`mel_loss`] averaged over a batch.
pub fn mel_loss_batch(analyzer: &MelAnalyzer, real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    non_empty("mel_loss", real)?;
    if real.len() != fake.len() {
        return Err(Error::invalid(
            "mel_loss",
            format!("{} real vs {} fake clips", real.len(), fake.len()),
        ));
    }
    let terms = real
        .iter()
        .zip(fake)
        .map(|(r, f)| mel_loss(analyzer, r, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(add_all(terms)?.mul_scalar(1.0 / real.len() as f64))
}

fn validate_objective(family: RFamily, objective: Objective) -> Result<()> {
    if objective == Objective::San {
        family.require_san_valid()?;
    }
    Ok(())
}

/// Discriminator loss with per-scale mean logits for logging.
#[derive(Debug, Clone)]
pub struct DiscriminatorLoss {
    pub loss: Tensor,
    pub real_logit_means: Vec<f64>,
    pub fake_logit_means: Vec<f64>,
}

fn logit_means(logits: &[Vec<Tensor>]) -> Vec<f64> {
    logits
        .iter()
        .map(|scale| {
            let n: usize = scale.iter().map(Tensor::numel).sum();
            scale.iter().map(|t| t.data().iter().sum::<f64>()).sum::<f64>() / n as f64
        })
        .collect()
}

/// `−v_san` (or `−v_gan`) to be minimized; the fake batch is detached here.
pub fn discriminator_loss(
    bank: &DiscriminatorBank,
    real: &[Tensor],
    fake: &[Tensor],
    family: RFamily,
    objective: Objective,
) -> Result<DiscriminatorLoss> {
    validate_objective(family, objective)?;
    non_empty("d_total", real)?;
    non_empty("d_total", fake)?;
    let fake: Vec<Tensor> = fake.iter().map(Tensor::detach).collect();
    let (v, real_logits, fake_logits) = match objective {
        Objective::Gan => {
            let r = logits_of(forward_batch(bank, real, DiscMode::Plain)?);
            let f = logits_of(forward_batch(bank, &fake, DiscMode::Plain)?);
            let terms = r
                .iter()
                .zip(&f)
                .map(|(rk, fk)| v_gan_logits(family, rk, fk))
                .collect::<Result<Vec<_>>>()?;
            (add_all(terms)?, r, f)
        }
        Objective::San => {
            let (r_of, r_pf) = split_logits(bank, real)?;
            let (f_of, f_pf) = split_logits(bank, &fake)?;
            let terms = (0..bank.scales())
                .map(|k| v_san_logits(family, &r_of[k], &f_of[k], &r_pf[k], &f_pf[k]))
                .collect::<Result<Vec<_>>>()?;
            (add_all(terms)?, r_of, f_of)
        }
    };
    Ok(DiscriminatorLoss {
        loss: v.neg(),
        real_logit_means: logit_means(&real_logits),
        fake_logit_means: logit_means(&fake_logits),
    })
}

/// Total discriminator loss, `−V` summed over scales.
pub fn d_total(
    bank: &DiscriminatorBank,
    real: &[Tensor],
    fake: &[Tensor],
    family: RFamily,
    objective: Objective,
) -> Result<Tensor> {
    Ok(discriminator_loss(bank, real, fake, family, objective)?.loss)
}

/// Generator loss and its components.
#[derive(Debug, Clone)]
pub struct GeneratorLoss {
    pub total: Tensor,
    pub adv: Tensor,
    pub fm: Tensor,
    pub mel: Tensor,
}

/// `J + λ_FM·J_FM + λ_mel·J_mel`. One forward of the fake batch through the
/// bank serves both the adversarial and feature-matching terms; discriminator
/// parameters are detached in it, so values and generator gradients equal
/// those of [`j_gan`]/[`j_san`] while the bank receives no gradient.
pub fn generator_loss(
    bank: &DiscriminatorBank,
    analyzer: &MelAnalyzer,
    real: &[Tensor],
    fake: &[Tensor],
    family: RFamily,
    objective: Objective,
    weights: LossWeights,
) -> Result<GeneratorLoss> {
    validate_objective(family, objective)?;
    non_empty("g_total", real)?;
    non_empty("g_total", fake)?;
    let f_outs = forward_batch(bank, fake, DiscMode::Frozen)?;
    let r_outs = real_features(bank, real)?;
    let fm = fm_from_outputs(&r_outs, &f_outs)?;
    let f_logits = logits_of(f_outs);
    let adv = add_all(
        f_logits
            .iter()
            .map(|fk| j_logits(family, fk))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let mel = mel_loss_batch(analyzer, real, fake)?;
    let total = weights.combine(&adv, &fm, &mel)?;
    Ok(GeneratorLoss { total, adv, fm, mel })
}

/// Total generator loss.
pub fn g_total(
    bank: &DiscriminatorBank,
    analyzer: &MelAnalyzer,
    real: &[Tensor],
    fake: &[Tensor],
    family: RFamily,
    objective: Objective,
    weights: LossWeights,
) -> Result<Tensor> {
    Ok(generator_loss(bank, analyzer, real, fake, family, objective, weights)?.total)
}
