use rand::Rng;

use super::activation::{snake, snakebeta, ActivationKind};
use super::{init_normal, NamedParams};
use crate::error::{Error, Result};
use crate::grad::Tensor;

/// Keeps the residual stack near identity and the output out of `tanh` saturation at init.
pub const RESIDUAL_GAIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_mels: usize,
    /// Width after the input projection, then after each upsampling block.
    pub channels: Vec<usize>,
    /// Upsampling factor per block; the product must equal the mel hop.
    pub factors: Vec<usize>,
    pub activation: ActivationKind,
    /// Kernel size of the input projection, residual convs and output projection.
    pub kernel: usize,
    /// Init std for conv kernels; `None` uses `1/sqrt(fan_in)`, damped by
    /// [`RESIDUAL_GAIN`] on the residual and output convs.
    pub init_std: Option<f64>,
}

impl GeneratorConfig {
    pub fn validate(&self, hop: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("generator", msg));
        if self.factors.is_empty() {
            return bad("need at least one upsampling block".into());
        }
        if self.channels.len() != self.factors.len() + 1 {
            return bad(format!(
                "{} channel widths given for {} blocks (need blocks + 1)",
                self.channels.len(),
                self.factors.len()
            ));
        }
        if self.channels.contains(&0) || self.n_mels == 0 {
            return bad("channel widths must be positive".into());
        }
        if let Some(f) = self.factors.iter().find(|&&f| f < 2 || f % 2 != 0) {
            return bad(format!("upsampling factor {f} must be even and >= 2"));
        }
        let product: usize = self.factors.iter().product();
        if product != hop {
            return bad(format!(
                "upsampling factors {:?} multiply to {product}, but the mel hop is {hop}",
                self.factors
            ));
        }
        if self.kernel.is_multiple_of(2) {
            return bad(format!("kernel {} must be odd", self.kernel));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        self.factors.iter().product()
    }
}

#[derive(Debug, Clone)]
struct Act {
    kind: ActivationKind,
    alpha: Tensor,
    beta: Option<Tensor>,
}

impl Act {
    fn new(kind: ActivationKind, channels: usize) -> Result<Self> {
        let alpha = Tensor::param(vec![0.0; channels], &[channels])?;
        let beta = match kind {
            ActivationKind::Snake => None,
            ActivationKind::SnakeBeta => Some(Tensor::param(vec![0.0; channels], &[channels])?),
        };
        Ok(Self { kind, alpha, beta })
    }

    fn apply(&self, x: &Tensor, frozen: bool) -> Result<Tensor> {
        let view = |t: &Tensor| if frozen { t.detach() } else { t.clone() };
        match (&self.kind, &self.beta) {
            (ActivationKind::SnakeBeta, Some(b)) => snakebeta(x, &view(&self.alpha), &view(b)),
            _ => snake(x, &view(&self.alpha)),
        }
    }

    fn push_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.alpha"), self.alpha.clone()));
        if let Some(b) = &self.beta {
            out.push((format!("{prefix}.beta"), b.clone()));
        }
    }
}

#[derive(Debug, Clone)]
struct Conv {
    weight: Tensor,
    bias: Tensor,
}

impl Conv {
    fn new<R: Rng>(
        shape: [usize; 3],
        out_ch: usize,
        fan_in: usize,
        gain: f64,
        std: Option<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let std = std.unwrap_or(gain / (fan_in as f64).sqrt());
        Ok(Self {
            weight: init_normal(&shape, std, rng)?,
            bias: Tensor::param(vec![0.0; out_ch], &[out_ch, 1])?,
        })
    }

    fn views(&self, frozen: bool) -> (Tensor, Tensor) {
        if frozen {
            (self.weight.detach(), self.bias.detach())
        } else {
            (self.weight.clone(), self.bias.clone())
        }
    }

    fn push_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.weight"), self.weight.clone()));
        out.push((format!("{prefix}.bias"), self.bias.clone()));
    }
}

#[derive(Debug, Clone)]
struct UpBlock {
    factor: usize,
    act: Act,
    up: Conv,
    res_act: Act,
    res: Conv,
}

/// Mel-conditioned waveform generator: input projection, transposed-conv
/// upsampling blocks (each followed by one residual conv unit), output
/// projection and `tanh`.
#[derive(Debug, Clone)]
pub struct Generator {
    cfg: GeneratorConfig,
    input: Conv,
    blocks: Vec<UpBlock>,
    out_act: Act,
    output: Conv,
}

impl Generator {
    /// Fails if the upsampling factors do not multiply to `hop`.
    pub fn new<R: Rng>(cfg: GeneratorConfig, hop: usize, rng: &mut R) -> Result<Self> {
        cfg.validate(hop)?;
        let k = cfg.kernel;
        let c0 = cfg.channels[0];
        let input = Conv::new([c0, cfg.n_mels, k], c0, cfg.n_mels * k, 1.0, cfg.init_std, rng)?;
        let mut blocks = Vec::with_capacity(cfg.factors.len());
        for (i, &u) in cfg.factors.iter().enumerate() {
            let (cin, cout) = (cfg.channels[i], cfg.channels[i + 1]);
            blocks.push(UpBlock {
                factor: u,
                act: Act::new(cfg.activation, cin)?,
                // transposed kernels are laid out [C_in × C_out × K]; each output
                // sample sees two taps per input channel
                up: Conv::new([cin, cout, 2 * u], cout, 2 * cin, 1.0, cfg.init_std, rng)?,
                res_act: Act::new(cfg.activation, cout)?,
                res: Conv::new([cout, cout, k], cout, cout * k, RESIDUAL_GAIN, cfg.init_std, rng)?,
            });
        }
        let last = *cfg.channels.last().expect("validated");
        let out_act = Act::new(cfg.activation, last)?;
        let output = Conv::new([1, last, k], 1, last * k, RESIDUAL_GAIN, cfg.init_std, rng)?;
        Ok(Self {
            cfg,
            input,
            blocks,
            out_act,
            output,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn hop(&self) -> usize {
        self.cfg.hop()
    }

    /// Maps log-mel frames `[n_mels × F]` to `F·hop` samples in (−1, 1).
    pub fn forward(&self, mel: &Tensor) -> Result<Tensor> {
        self.run(mel, false)
    }

    /// Like [`Generator::forward`] with every parameter detached.
    pub fn forward_frozen(&self, mel: &Tensor) -> Result<Tensor> {
        self.run(mel, true)
    }

    fn run(&self, mel: &Tensor, frozen: bool) -> Result<Tensor> {
        if mel.rank() != 2 || mel.shape()[0] != self.cfg.n_mels {
            return Err(Error::ShapeMismatch {
                op: "generator",
                lhs: mel.shape().to_vec(),
                rhs: vec![self.cfg.n_mels, 0],
            });
        }
        let pad = self.cfg.kernel / 2;
        let conv = |x: &Tensor, c: &Conv| -> Result<Tensor> {
            let (w, b) = c.views(frozen);
            x.conv1d(&w, 1, pad)?.add(&b)
        };
        let mut h = conv(mel, &self.input)?;
        for blk in &self.blocks {
            let a = blk.act.apply(&h, frozen)?;
            let (w, b) = blk.up.views(frozen);
            h = a.conv_transpose1d(&w, blk.factor, blk.factor / 2)?.add(&b)?;
            let r = conv(&blk.res_act.apply(&h, frozen)?, &blk.res)?;
            h = h.add(&r)?;
        }
        let y = conv(&self.out_act.apply(&h, frozen)?, &self.output)?.tanh();
        let n = y.numel();
        y.reshape(&[n])
    }
}

impl NamedParams for Generator {
    fn named_params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.input.push_params("gen.input", &mut out);
        for (i, b) in self.blocks.iter().enumerate() {
            b.act.push_params(&format!("gen.block{i}.act"), &mut out);
            b.up.push_params(&format!("gen.block{i}.up"), &mut out);
            b.res_act.push_params(&format!("gen.block{i}.res_act"), &mut out);
            b.res.push_params(&format!("gen.block{i}.res"), &mut out);
        }
        self.out_act.push_params("gen.out_act", &mut out);
        self.output.push_params("gen.output", &mut out);
        out
    }
}
