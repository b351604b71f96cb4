use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::dsp::MelParams;
use crate::error::{Error, Result};
use crate::nets::{ActivationKind, DiscriminatorConfig, GeneratorConfig};
use crate::objectives::{LossWeights, Objective, RFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.8,
            beta2: 0.99,
            lr_decay: 0.999,
        }
    }
}

/// Synthetic harmonic dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub num_clips: usize,
    /// Clip length in samples.
    pub clip_len: usize,
    pub f0_min: f64,
    pub f0_max: f64,
    pub harmonics_min: usize,
    pub harmonics_max: usize,
    /// Std of additive Gaussian noise relative to the harmonic signal's RMS.
    pub noise: f64,
    /// Synthesize clips on worker threads (same output as sequential).
    pub parallel: bool,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            num_clips: 16,
            clip_len: 24_000,
            f0_min: 80.0,
            f0_max: 400.0,
            harmonics_min: 1,
            harmonics_max: 8,
            noise: 0.01,
            parallel: false,
        }
    }
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub audio: MelParams,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub scales: usize,
    pub family: RFamily,
    pub objective: Objective,
    pub weights: LossWeights,
    pub optim: OptimConfig,
    pub steps: u64,
    pub batch: usize,
    /// Training segment length in samples.
    pub segment: usize,
    pub seed: u64,
    pub log_every: u64,
    /// Checkpoint and sample-WAV interval; 0 writes only at the end.
    pub checkpoint_every: u64,
    pub data: DatasetSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

const KEYS: &[&str] = &[
    "preset",
    "audio.sample_rate",
    "audio.n_fft",
    "audio.win_length",
    "audio.hop",
    "audio.n_mels",
    "audio.fmin",
    "audio.fmax",
    "gen.channels",
    "gen.factors",
    "gen.kernel",
    "gen.activation",
    "gen.init_std",
    "disc.channels",
    "disc.kernel",
    "disc.stride",
    "disc.slope",
    "disc.init_std",
    "disc.scales",
    "loss.family",
    "loss.objective",
    "loss.lambda_fm",
    "loss.lambda_mel",
    "optim.lr",
    "optim.beta1",
    "optim.beta2",
    "optim.lr_decay",
    "train.steps",
    "train.batch",
    "train.segment",
    "train.seed",
    "train.log_every",
    "train.checkpoint_every",
    "data.num_clips",
    "data.clip_len",
    "data.f0_min",
    "data.f0_max",
    "data.harmonics_min",
    "data.harmonics_max",
    "data.noise",
    "data.parallel",
];

fn bad(key: &str, value: &str, msg: impl Into<String>) -> Error {
    Error::BadConfigValue {
        key: key.to_string(),
        value: value.to_string(),
        msg: msg.into(),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e.to_string()))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    /// 24 kHz audio, 100 mels, hop 256; 8192-sample segments, batch 4.
    pub fn desk() -> Self {
        Self {
            audio: MelParams::default(),
            generator: GeneratorConfig {
                n_mels: 100,
                channels: vec![128, 64, 32, 16],
                factors: vec![8, 8, 4],
                activation: ActivationKind::Snake,
                kernel: 7,
                init_std: None,
            },
            discriminator: DiscriminatorConfig::default(),
            scales: 2,
            family: RFamily::LsSan,
            objective: Objective::San,
            weights: LossWeights::default(),
            optim: OptimConfig::default(),
            steps: 5000,
            batch: 4,
            segment: 8192,
            seed: 0,
            log_every: 10,
            checkpoint_every: 1000,
            data: DatasetSpec::default(),
        }
    }

    /// 8 kHz audio, 32 mels, hop 64; 2048-sample segments, batch 2. Small
    /// enough for thousands of CPU steps per minute-scale budget.
    ///
    /// The mel weight is ten times the desk value and the learning rate
    /// anneals by 0.998 per epoch (about 0.08x over 5000 steps). Without
    /// both, the discriminator outpaces the small generator and the mel loss
    /// drifts back up after a few thousand steps. Noise sits at 0.2% of the
    /// clip RMS because random noise bins put a floor under the log-mel L1.
    pub fn toy() -> Self {
        Self {
            audio: MelParams {
                sample_rate: 8000,
                n_fft: 256,
                win_length: 256,
                hop: 64,
                n_mels: 32,
                fmin: 0.0,
                fmax: 4000.0,
            },
            generator: GeneratorConfig {
                n_mels: 32,
                channels: vec![128, 64, 32, 16],
                factors: vec![4, 4, 4],
                activation: ActivationKind::Snake,
                kernel: 7,
                init_std: None,
            },
            discriminator: DiscriminatorConfig::default(),
            scales: 2,
            family: RFamily::LsSan,
            objective: Objective::San,
            weights: LossWeights { fm: 2.0, mel: 450.0 },
            optim: OptimConfig {
                lr: 5e-4,
                lr_decay: 0.998,
                ..OptimConfig::default()
            },
            steps: 5000,
            batch: 2,
            segment: 2048,
            seed: 0,
            log_every: 10,
            checkpoint_every: 1000,
            data: DatasetSpec {
                num_clips: 8,
                clip_len: 8000,
                f0_min: 100.0,
                f0_max: 400.0,
                harmonics_min: 1,
                harmonics_max: 6,
                noise: 0.002,
                parallel: false,
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "toy" => Ok(Self::toy()),
            _ => Err(bad("preset", name, "accepted: desk, toy")),
        }
    }

    pub fn accepted_keys() -> &'static [&'static str] {
        KEYS
    }

    pub fn validate(&self) -> Result<()> {
        self.audio.validate()?;
        if self.generator.n_mels != self.audio.n_mels {
            return Err(bad(
                "gen.n_mels",
                &self.generator.n_mels.to_string(),
                format!("must equal audio.n_mels = {}", self.audio.n_mels),
            ));
        }
        self.generator.validate(self.audio.hop)?;
        self.discriminator.validate()?;
        self.weights.validate()?;
        if self.objective == Objective::San {
            self.family.require_san_valid()?;
        }
        if self.scales == 0 {
            return Err(bad("disc.scales", "0", "need at least one scale"));
        }
        if self.batch == 0 {
            return Err(bad("train.batch", "0", "batch must be at least 1"));
        }
        if self.segment == 0 || !self.segment.is_multiple_of(self.audio.hop) {
            return Err(bad(
                "train.segment",
                &self.segment.to_string(),
                format!("must be a positive multiple of the hop {}", self.audio.hop),
            ));
        }
        let coarsest = self.segment >> (self.scales - 1);
        let need = self.discriminator.min_input_len();
        if coarsest < need {
            return Err(bad(
                "train.segment",
                &self.segment.to_string(),
                format!("coarsest scale sees {coarsest} samples; the discriminator needs {need}"),
            ));
        }
        if self.data.clip_len < self.segment {
            return Err(bad(
                "data.clip_len",
                &self.data.clip_len.to_string(),
                format!("clips must be at least one segment ({}) long", self.segment),
            ));
        }
        if self.data.num_clips == 0 {
            return Err(bad("data.num_clips", "0", "need at least one clip"));
        }
        let o = &self.optim;
        if !(o.lr > 0.0 && o.lr.is_finite()) {
            return Err(bad("optim.lr", &o.lr.to_string(), "must be positive"));
        }
        for (k, v) in [("optim.beta1", o.beta1), ("optim.beta2", o.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(bad(k, &v.to_string(), "must lie in [0, 1)"));
            }
        }
        if !(o.lr_decay > 0.0 && o.lr_decay <= 1.0) {
            return Err(bad("optim.lr_decay", &o.lr_decay.to_string(), "must lie in (0, 1]"));
        }
        if self.log_every == 0 {
            return Err(bad("train.log_every", "0", "must be at least 1"));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "preset" => *self = Self::preset(v)?,
            "audio.sample_rate" => self.audio.sample_rate = num(key, v)?,
            "audio.n_fft" => self.audio.n_fft = num(key, v)?,
            "audio.win_length" => self.audio.win_length = num(key, v)?,
            "audio.hop" => self.audio.hop = num(key, v)?,
            "audio.n_mels" => {
                self.audio.n_mels = num(key, v)?;
                self.generator.n_mels = self.audio.n_mels;
            }
            "audio.fmin" => self.audio.fmin = num(key, v)?,
            "audio.fmax" => self.audio.fmax = num(key, v)?,
            "gen.channels" => self.generator.channels = list(key, v)?,
            "gen.factors" => self.generator.factors = list(key, v)?,
            "gen.kernel" => self.generator.kernel = num(key, v)?,
            "gen.activation" => {
                self.generator.activation =
                    ActivationKind::parse(v).ok_or_else(|| bad(key, v, "accepted: snake, snakebeta"))?
            }
            "gen.init_std" => {
                self.generator.init_std = if v == "auto" { None } else { Some(num(key, v)?) };
            }
            "disc.channels" => self.discriminator.channels = list(key, v)?,
            "disc.kernel" => self.discriminator.kernel = num(key, v)?,
            "disc.stride" => self.discriminator.stride = num(key, v)?,
            "disc.slope" => self.discriminator.slope = num(key, v)?,
            "disc.init_std" => self.discriminator.init_std = num(key, v)?,
            "disc.scales" => self.scales = num(key, v)?,
            "loss.family" => {
                self.family = v.parse().map_err(|e: Error| bad(key, v, e.to_string()))?;
                self.objective = self.family.default_objective();
            }
            "loss.objective" => self.objective = v.parse().map_err(|e: Error| bad(key, v, e.to_string()))?,
            "loss.lambda_fm" => self.weights.fm = num(key, v)?,
            "loss.lambda_mel" => self.weights.mel = num(key, v)?,
            "optim.lr" => self.optim.lr = num(key, v)?,
            "optim.beta1" => self.optim.beta1 = num(key, v)?,
            "optim.beta2" => self.optim.beta2 = num(key, v)?,
            "optim.lr_decay" => self.optim.lr_decay = num(key, v)?,
            "train.steps" => self.steps = num(key, v)?,
            "train.batch" => self.batch = num(key, v)?,
            "train.segment" => self.segment = num(key, v)?,
            "train.seed" => self.seed = num(key, v)?,
            "train.log_every" => self.log_every = num(key, v)?,
            "train.checkpoint_every" => self.checkpoint_every = num(key, v)?,
            "data.num_clips" => self.data.num_clips = num(key, v)?,
            "data.clip_len" => self.data.clip_len = num(key, v)?,
            "data.f0_min" => self.data.f0_min = num(key, v)?,
            "data.f0_max" => self.data.f0_max = num(key, v)?,
            "data.harmonics_min" => self.data.harmonics_min = num(key, v)?,
            "data.harmonics_max" => self.data.harmonics_max = num(key, v)?,
            "data.noise" => self.data.noise = num(key, v)?,
            "data.parallel" => self.data.parallel = num(key, v)?,
            _ => {
                return Err(Error::UnknownConfigKey {
                    key: key.to_string(),
                    accepted: KEYS.join(", "),
                })
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the desk defaults. `#` starts a
    /// comment; a `preset` line is applied before every other key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", lineno + 1), line, "expected `key = value`"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = Self::desk();
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "preset") {
            cfg = Self::preset(v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every key with its value; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let a = &self.audio;
        let g = &self.generator;
        let d = &self.discriminator;
        let o = &self.optim;
        let ds = &self.data;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("audio.sample_rate", a.sample_rate.to_string());
        kv("audio.n_fft", a.n_fft.to_string());
        kv("audio.win_length", a.win_length.to_string());
        kv("audio.hop", a.hop.to_string());
        kv("audio.n_mels", a.n_mels.to_string());
        kv("audio.fmin", a.fmin.to_string());
        kv("audio.fmax", a.fmax.to_string());
        kv("gen.channels", join(&g.channels));
        kv("gen.factors", join(&g.factors));
        kv("gen.kernel", g.kernel.to_string());
        kv("gen.activation", g.activation.name().to_string());
        kv("gen.init_std", g.init_std.map_or("auto".to_string(), |v| v.to_string()));
        kv("disc.channels", join(&d.channels));
        kv("disc.kernel", d.kernel.to_string());
        kv("disc.stride", d.stride.to_string());
        kv("disc.slope", d.slope.to_string());
        kv("disc.init_std", d.init_std.to_string());
        kv("disc.scales", self.scales.to_string());
        kv("loss.family", self.family.name().to_string());
        kv("loss.objective", self.objective.name().to_string());
        kv("loss.lambda_fm", self.weights.fm.to_string());
        kv("loss.lambda_mel", self.weights.mel.to_string());
        kv("optim.lr", o.lr.to_string());
        kv("optim.beta1", o.beta1.to_string());
        kv("optim.beta2", o.beta2.to_string());
        kv("optim.lr_decay", o.lr_decay.to_string());
        kv("train.steps", self.steps.to_string());
        kv("train.batch", self.batch.to_string());
        kv("train.segment", self.segment.to_string());
        kv("train.seed", self.seed.to_string());
        kv("train.log_every", self.log_every.to_string());
        kv("train.checkpoint_every", self.checkpoint_every.to_string());
        kv("data.num_clips", ds.num_clips.to_string());
        kv("data.clip_len", ds.clip_len.to_string());
        kv("data.f0_min", ds.f0_min.to_string());
        kv("data.f0_max", ds.f0_max.to_string());
        kv("data.harmonics_min", ds.harmonics_min.to_string());
        kv("data.harmonics_max", ds.harmonics_max.to_string());
        kv("data.noise", ds.noise.to_string());
        kv("data.parallel", ds.parallel.to_string());
        s
    }

    /// Optimizer steps in one pass over the clip list (at least 1).
    pub fn steps_per_epoch(&self) -> u64 {
        ((self.data.num_clips / self.batch) as u64).max(1)
    }

    /// Learning rate after `step` completed steps.
    pub fn lr_at(&self, step: u64) -> f64 {
        let epoch = step / self.steps_per_epoch();
        self.optim.lr * self.optim.lr_decay.powi(epoch.min(i32::MAX as u64) as i32)
    }
}
