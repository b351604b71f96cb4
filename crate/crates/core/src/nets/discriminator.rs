use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{init_normal, NamedParams};
use crate::error::{Error, Result};
use crate::grad::{no_grad, stop_gradient, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorConfig {
    /// Output width of each strided conv layer; the last one is the feature
    /// dimension `D` sliced by the direction.
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub slope: f64,
    pub init_std: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            channels: vec![16, 32, 64, 64],
            kernel: 15,
            stride: 4,
            slope: 0.1,
            init_std: 0.01,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::invalid(
                "discriminator",
                "need at least one layer of positive width",
            ));
        }
        if *self.channels.last().expect("non-empty") < 2 {
            return Err(Error::invalid(
                "discriminator",
                "feature dimension D must be at least 2",
            ));
        }
        if self.kernel == 0 || self.stride == 0 {
            return Err(Error::invalid("discriminator", "kernel and stride must be positive"));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        *self.channels.last().expect("validated")
    }

    fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// Shortest input for which every layer produces at least one sample.
    pub fn min_input_len(&self) -> usize {
        let need = self.kernel.saturating_sub(2 * self.padding()).max(1);
        // each layer needs `need` inputs; walk backwards through the stack
        let mut len = need;
        for _ in 1..self.channels.len() {
            len = ((len - 1) * self.stride + self.kernel)
                .saturating_sub(2 * self.padding())
                .max(need);
        }
        len
    }
}

/// Which parts of `f(x) = ωᵀh_φ(x)` receive gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscMode {
    /// Nothing detached.
    Plain,
    /// ω detached: gradients reach φ (and the input) only.
    OmegaFrozen,
    /// h_φ(x) detached: gradients reach w only, through ω = w/‖w‖.
    PhiFrozen,
    /// Every discriminator parameter detached: gradients reach the input only.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct DiscOutput {
    /// Per-location projections `ω·h(x)[:, t]`, shape `[T_loc]`.
    pub logits: Tensor,
    /// Activations after each conv layer (the last is `h(x)`).
    pub features: Vec<Tensor>,
}

/// Both stop-gradient views from one feature pass.
#[derive(Debug, Clone)]
pub struct SplitOutput {
    pub omega_frozen: Tensor,
    pub phi_frozen: Tensor,
    pub features: Vec<Tensor>,
}

/// Discriminator decomposed into a feature extractor and one direction.
#[derive(Debug, Clone)]
pub struct SlicedDiscriminator {
    cfg: DiscriminatorConfig,
    convs: Vec<(Tensor, Tensor)>,
    direction: Tensor,
}

/// Uniform sample on the unit sphere in `dim` dimensions.
pub(crate) fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `w/‖w‖₂` as a differentiable expression.
pub fn normalize_direction(w: &Tensor) -> Result<Tensor> {
    w.div(&w.square().sum().sqrt())
}

impl SlicedDiscriminator {
    pub fn new<R: Rng>(cfg: DiscriminatorConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut convs = Vec::with_capacity(cfg.channels.len());
        let mut cin = 1;
        for &cout in &cfg.channels {
            let w = init_normal(&[cout, cin, cfg.kernel], cfg.init_std, rng)?;
            let b = Tensor::param(vec![0.0; cout], &[cout, 1])?;
            convs.push((w, b));
            cin = cout;
        }
        let d = cfg.feature_dim();
        let direction = Tensor::param(random_unit(d, rng), &[1, d])?;
        Ok(Self { cfg, convs, direction })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.cfg
    }

    /// The raw, unnormalized direction `w` (`[1×D]`).
    pub fn direction(&self) -> &Tensor {
        &self.direction
    }

    /// ω = w/‖w‖₂ (tracked).
    pub fn omega(&self) -> Result<Tensor> {
        normalize_direction(&self.direction)
    }

    pub fn omega_norm(&self) -> f64 {
        let w = self.direction.data();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter().map(|x| (x / n) * (x / n)).sum::<f64>().sqrt()
    }

    fn features(&self, x: &Tensor, frozen: bool) -> Result<Vec<Tensor>> {
        if x.rank() != 1 {
            return Err(Error::invalid(
                "discriminator",
                format!("expected a 1-D waveform, got shape {:?}", x.shape()),
            ));
        }
        let min = self.cfg.min_input_len();
        if x.numel() < min {
            return Err(Error::invalid(
                "discriminator",
                format!(
                    "input of {} samples is shorter than the required minimum {min}",
                    x.numel()
                ),
            ));
        }
        let mut h = x.reshape(&[1, x.numel()])?;
        let mut feats = Vec::with_capacity(self.convs.len());
        for (w, b) in &self.convs {
            let (w, b) = if frozen {
                (w.detach(), b.detach())
            } else {
                (w.clone(), b.clone())
            };
            h = h
                .conv1d(&w, self.cfg.stride, self.cfg.padding())?
                .add(&b)?
                .leaky_relu(self.cfg.slope);
            feats.push(h.clone());
        }
        Ok(feats)
    }

    fn project(omega: &Tensor, h: &Tensor) -> Result<Tensor> {
        let p = omega.matmul(h)?;
        let n = p.numel();
        p.reshape(&[n])
    }

    pub fn forward(&self, x: &Tensor, mode: DiscMode) -> Result<DiscOutput> {
        let (features, omega) = match mode {
            DiscMode::Plain => (self.features(x, false)?, self.omega()?),
            DiscMode::OmegaFrozen => (self.features(x, false)?, stop_gradient(&self.omega()?)),
            DiscMode::PhiFrozen => {
                let f = no_grad(|| self.features(x, true))?;
                (f, self.omega()?)
            }
            DiscMode::Frozen => (self.features(x, true)?, stop_gradient(&self.omega()?)),
        };
        let logits = Self::project(&omega, features.last().expect("at least one layer"))?;
        Ok(DiscOutput { logits, features })
    }

    /// One feature pass yielding the ω-frozen and φ-frozen logits together;
    /// values equal `forward` in the respective modes.
    pub fn forward_split(&self, x: &Tensor) -> Result<SplitOutput> {
        let features = self.features(x, false)?;
        let h = features.last().expect("at least one layer");
        let omega = self.omega()?;
        let omega_frozen = Self::project(&stop_gradient(&omega), h)?;
        let phi_frozen = Self::project(&omega, &stop_gradient(h))?;
        Ok(SplitOutput {
            omega_frozen,
            phi_frozen,
            features,
        })
    }
}

impl NamedParams for SlicedDiscriminator {
    fn named_params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, (w, b)) in self.convs.iter().enumerate() {
            out.push((format!("conv{i}.weight"), w.clone()));
            out.push((format!("conv{i}.bias"), b.clone()));
        }
        out.push(("direction".into(), self.direction.clone()));
        out
    }
}

/// Multi-scale bank: scale `k` (0-based) sees the input average-pooled by `2^k`.
#[derive(Debug, Clone)]
pub struct DiscriminatorBank {
    discs: Vec<SlicedDiscriminator>,
}

impl DiscriminatorBank {
    pub fn new<R: Rng>(scales: usize, cfg: DiscriminatorConfig, rng: &mut R) -> Result<Self> {
        if scales == 0 {
            return Err(Error::invalid("discriminator bank", "need at least one scale"));
        }
        let discs = (0..scales)
            .map(|_| SlicedDiscriminator::new(cfg.clone(), rng))
            .collect::<Result<_>>()?;
        Ok(Self { discs })
    }

    pub fn scales(&self) -> usize {
        self.discs.len()
    }

    pub fn discriminators(&self) -> &[SlicedDiscriminator] {
        &self.discs
    }

    /// Per-scale inputs, each half as long as the previous one.
    pub fn scale_inputs(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        let mut inputs = Vec::with_capacity(self.discs.len());
        let mut cur = x.clone();
        for k in 0..self.discs.len() {
            if k > 0 {
                cur = cur.avg_pool1d(2, 2)?;
            }
            inputs.push(cur.clone());
        }
        Ok(inputs)
    }

    pub fn forward(&self, x: &Tensor, mode: DiscMode) -> Result<Vec<DiscOutput>> {
        self.scale_inputs(x)?
            .iter()
            .zip(&self.discs)
            .map(|(xi, d)| d.forward(xi, mode))
            .collect()
    }

    pub fn forward_split(&self, x: &Tensor) -> Result<Vec<SplitOutput>> {
        self.scale_inputs(x)?
            .iter()
            .zip(&self.discs)
            .map(|(xi, d)| d.forward_split(xi))
            .collect()
    }
}

impl NamedParams for DiscriminatorBank {
    fn named_params(&self) -> Vec<(String, Tensor)> {
        self.discs
            .iter()
            .enumerate()
            .flat_map(|(k, d)| {
                d.named_params()
                    .into_iter()
                    .map(move |(n, t)| (format!("disc{k}.{n}"), t))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> DiscriminatorConfig {
        DiscriminatorConfig {
            channels: vec![3, 4],
            kernel: 5,
            stride: 2,
            slope: 0.1,
            init_std: 0.3,
        }
    }

    fn signal(n: usize) -> Tensor {
        Tensor::from_vec((0..n).map(|i| (i as f64 * 0.37).sin()).collect())
    }

    #[test]
    fn omega_of_three_four() {
        let w = Tensor::param(vec![3.0, 4.0], &[1, 2]).unwrap();
        let o = normalize_direction(&w).unwrap().to_vec();
        assert!((o[0] - 0.6).abs() < 1e-15 && (o[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn modes_share_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = SlicedDiscriminator::new(tiny(), &mut rng).unwrap();
        let x = signal(40);
        let plain = d.forward(&x, DiscMode::Plain).unwrap().logits.to_vec();
        for mode in [DiscMode::OmegaFrozen, DiscMode::PhiFrozen, DiscMode::Frozen] {
            assert_eq!(d.forward(&x, mode).unwrap().logits.to_vec(), plain);
        }
        let split = d.forward_split(&x).unwrap();
        assert_eq!(split.omega_frozen.to_vec(), plain);
        assert_eq!(split.phi_frozen.to_vec(), plain);
    }

    #[test]
    fn omega_frozen_gives_zero_direction_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = SlicedDiscriminator::new(tiny(), &mut rng).unwrap();
        d.forward(&signal(40), DiscMode::OmegaFrozen)
            .unwrap()
            .logits
            .mean()
            .backward()
            .unwrap();
        assert!(d.direction().grad().is_none());
        assert!(d.named_params()[0].1.grad().is_some());
    }

    #[test]
    fn phi_frozen_grad_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = SlicedDiscriminator::new(tiny(), &mut rng).unwrap();
        d.direction().update_data(|w| w.iter_mut().for_each(|v| *v *= 3.7));
        d.forward(&signal(40), DiscMode::PhiFrozen)
            .unwrap()
            .logits
            .mean()
            .backward()
            .unwrap();
        let g = d.direction().grad().unwrap();
        let omega = d.omega().unwrap().to_vec();
        let dot: f64 = g.iter().zip(&omega).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-6, "{dot}");
        assert!(d.named_params()[0].1.grad().is_none());
    }

    #[test]
    fn bank_scale_lengths_and_constant_pooling() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bank = DiscriminatorBank::new(3, DiscriminatorConfig::default(), &mut rng).unwrap();
        let x = Tensor::full(&[8192], 0.3);
        let inputs = bank.scale_inputs(&x).unwrap();
        let lens: Vec<usize> = inputs.iter().map(Tensor::numel).collect();
        assert_eq!(lens, vec![8192, 4096, 2048]);
        assert!(inputs[1].data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn single_scale_bank_matches_disc() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bank = DiscriminatorBank::new(1, tiny(), &mut rng).unwrap();
        let x = signal(64);
        let a = bank.forward(&x, DiscMode::Plain).unwrap();
        let b = bank.discriminators()[0].forward(&x, DiscMode::Plain).unwrap();
        assert_eq!(a[0].logits.to_vec(), b.logits.to_vec());
    }

    #[test]
    fn too_short_input_names_minimum() {
        let cfg = DiscriminatorConfig {
            channels: vec![2, 2],
            kernel: 4,
            stride: 2,
            slope: 0.1,
            init_std: 0.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = SlicedDiscriminator::new(cfg.clone(), &mut rng).unwrap();
        let min = cfg.min_input_len();
        assert!(d.forward(&signal(min), DiscMode::Plain).is_ok());
        let err = d.forward(&signal(min - 1), DiscMode::Plain).unwrap_err().to_string();
        assert!(err.contains(&format!("minimum {min}")), "{err}");
    }
}
