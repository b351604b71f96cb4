use std::fs::File;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::Adam;
use super::checkpoint::{read_records, write_records, Record};
use super::config::TrainConfig;
use super::data::{stream_rng, synth_dataset, Clip, Stream};
use crate::dsp::{wav_write, MelAnalyzer, MelSpec, Waveform};
use crate::error::{Error, Result};
use crate::grad::{no_grad, Tensor};
use crate::nets::{DiscriminatorBank, Generator, NamedParams};
use crate::objectives::{discriminator_loss, generator_loss};

/// Models, optimizer moments and progress; everything a checkpoint holds.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub config: TrainConfig,
    pub generator: Generator,
    pub bank: DiscriminatorBank,
    pub adam_g: Adam,
    pub adam_d: Adam,
    /// Completed optimizer steps.
    pub step: u64,
}

impl TrainState {
    pub fn init(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.seed, Stream::Init, 0);
        let generator = Generator::new(config.generator.clone(), config.audio.hop, &mut rng)?;
        let bank = DiscriminatorBank::new(config.scales, config.discriminator.clone(), &mut rng)?;
        let adam_g = Adam::new(&generator.named_params(), config.optim.beta1, config.optim.beta2);
        let adam_d = Adam::new(&bank.named_params(), config.optim.beta1, config.optim.beta2);
        Ok(Self {
            config,
            generator,
            bank,
            adam_g,
            adam_d,
            step: 0,
        })
    }

    pub fn to_records(&self) -> Vec<Record> {
        let mut out = vec![
            Record::u64("meta.step", self.step),
            Record::text("meta.config", &self.config.to_text()),
        ];
        for (name, t) in self
            .generator
            .named_params()
            .into_iter()
            .chain(self.bank.named_params())
        {
            out.push(Record::f64(name, t.shape(), t.to_vec()));
        }
        for (tag, adam, params) in [
            ("g", &self.adam_g, self.generator.named_params()),
            ("d", &self.adam_d, self.bank.named_params()),
        ] {
            out.push(Record::u64(format!("adam.{tag}.t"), adam.t));
            for (i, (name, t)) in params.iter().enumerate() {
                out.push(Record::f64(
                    format!("adam.{tag}.m.{name}"),
                    t.shape(),
                    adam.m[i].clone(),
                ));
                out.push(Record::f64(
                    format!("adam.{tag}.v.{name}"),
                    t.shape(),
                    adam.v[i].clone(),
                ));
            }
        }
        out
    }

    pub fn from_records(records: &[Record]) -> Result<Self> {
        let find = |name: &str| -> Result<&Record> {
            records
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing record {name}")))
        };
        let config = TrainConfig::parse(&find("meta.config")?.as_text()?)?;
        let mut state = Self::init(config)?;
        state.step = find("meta.step")?.as_u64()?;
        let load = |name: &str, t: &Tensor| -> Result<Vec<f64>> {
            let r = find(name)?;
            if r.shape != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "record {name} has shape {:?}, model expects {:?}",
                    r.shape,
                    t.shape()
                )));
            }
            Ok(r.as_f64()?.to_vec())
        };
        for (name, t) in state
            .generator
            .named_params()
            .into_iter()
            .chain(state.bank.named_params())
        {
            t.set_data(&load(&name, &t)?)?;
        }
        let gen_params = state.generator.named_params();
        let bank_params = state.bank.named_params();
        for (tag, adam, params) in [
            ("g", &mut state.adam_g, &gen_params),
            ("d", &mut state.adam_d, &bank_params),
        ] {
            adam.t = find(&format!("adam.{tag}.t"))?.as_u64()?;
            for (i, (name, t)) in params.iter().enumerate() {
                adam.m[i] = load(&format!("adam.{tag}.m.{name}"), t)?;
                adam.v[i] = load(&format!("adam.{tag}.v.{name}"), t)?;
            }
        }
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_records(path, &self.to_records())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_records(&read_records(path)?)
    }
}

/// Writes `state` to `path`.
pub fn checkpoint_save(state: &TrainState, path: impl AsRef<Path>) -> Result<()> {
    state.save(path)
}

/// Reads a state written by [`checkpoint_save`].
pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<TrainState> {
    TrainState::load(path)
}

/// One minibatch of aligned waveform segments and mel frames.
#[derive(Debug, Clone)]
pub struct Batch {
    pub real: Vec<Tensor>,
    pub mels: Vec<Tensor>,
    pub clips: Vec<usize>,
    /// Start of each segment, in samples.
    pub offsets: Vec<usize>,
}

/// Values recorded for one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub step: u64,
    pub lr: f64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub adv: f64,
    pub mel: f64,
    pub fm: f64,
    pub real_logits: Vec<f64>,
    pub fake_logits: Vec<f64>,
    pub omega_norms: Vec<f64>,
}

impl StepLog {
    pub fn real_logit_mean(&self) -> f64 {
        self.real_logits.iter().sum::<f64>() / self.real_logits.len() as f64
    }

    pub fn fake_logit_mean(&self) -> f64 {
        self.fake_logits.iter().sum::<f64>() / self.fake_logits.len() as f64
    }
}

/// Mel frames `[start, start + n)` as a `[n_mels × n]` tensor.
pub fn mel_window(mel: &MelSpec, start: usize, n: usize) -> Result<Tensor> {
    if start + n > mel.n_frames() {
        return Err(Error::invalid(
            "mel_window",
            format!("frames {start}..{} exceed {} available", start + n, mel.n_frames()),
        ));
    }
    let view = mel.frames.slice(ndarray::s![.., start..start + n]);
    Tensor::new(view.iter().copied().collect(), &[mel.n_mels(), n])
}

/// Vocodes the log-mel of `wave`; the output has `frames·hop` samples.
pub fn synthesize(generator: &Generator, analyzer: &MelAnalyzer, wave: &Waveform) -> Result<Waveform> {
    let mel = analyzer.log_mel_spec(wave)?;
    let y = no_grad(|| generator.forward(&mel.to_tensor()))?;
    Waveform::new(y.to_vec(), analyzer.params().sample_rate)
}

/// Alternating discriminator/generator optimization over a synthetic dataset.
pub struct Trainer {
    state: TrainState,
    clips: Vec<Clip>,
    analyzer: MelAnalyzer,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        Self::from_state(TrainState::init(config)?)
    }

    pub fn from_state(state: TrainState) -> Result<Self> {
        let cfg = &state.config;
        let clips = synth_dataset(&cfg.data, &cfg.audio, cfg.seed)?;
        let analyzer = MelAnalyzer::new(cfg.audio)?;
        Ok(Self { state, clips, analyzer })
    }

    pub fn from_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_state(TrainState::load(path)?)
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }

    pub fn config(&self) -> &TrainConfig {
        &self.state.config
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    pub fn analyzer(&self) -> &MelAnalyzer {
        &self.analyzer
    }

    /// The batch consumed by step `step` (0-based). Depends only on the seed
    /// and `step`: clips follow a fresh permutation each epoch and segment
    /// offsets are frame-aligned.
    pub fn batch(&self, step: u64) -> Result<Batch> {
        let cfg = &self.state.config;
        let n = self.clips.len() as u64;
        let hop = cfg.audio.hop;
        let frames = cfg.segment / hop;
        let mut offset_rng = stream_rng(cfg.seed, Stream::Offsets, step);
        let mut perm_cache: Option<(u64, Vec<usize>)> = None;
        let mut batch = Batch {
            real: Vec::with_capacity(cfg.batch),
            mels: Vec::with_capacity(cfg.batch),
            clips: Vec::with_capacity(cfg.batch),
            offsets: Vec::with_capacity(cfg.batch),
        };
        for i in 0..cfg.batch as u64 {
            let p = step * cfg.batch as u64 + i;
            let epoch = p / n;
            if perm_cache.as_ref().is_none_or(|(e, _)| *e != epoch) {
                let mut perm: Vec<usize> = (0..self.clips.len()).collect();
                perm.shuffle(&mut stream_rng(cfg.seed, Stream::Epoch, epoch));
                perm_cache = Some((epoch, perm));
            }
            let idx = perm_cache.as_ref().expect("just set").1[(p % n) as usize];
            let clip = &self.clips[idx];
            let max_frame = (clip.wave.len() - cfg.segment) / hop;
            let f0 = offset_rng.random_range(0..=max_frame);
            let start = f0 * hop;
            batch.real.push(Tensor::from_vec(
                clip.wave.samples()[start..start + cfg.segment].to_vec(),
            ));
            batch.mels.push(mel_window(&clip.mel, f0, frames)?);
            batch.clips.push(idx);
            batch.offsets.push(start);
        }
        Ok(batch)
    }

    fn check(&self, v: f64, what: &str) -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step: self.state.step + 1,
                what: what.to_string(),
            })
        }
    }

    /// One discriminator update on a freshly generated (detached) fake batch.
    /// Returns `(loss, real logit means, fake logit means)` per scale.
    pub fn discriminator_step(&mut self, batch: &Batch, lr: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let cfg = &self.state.config;
        let fake = no_grad(|| {
            batch
                .mels
                .iter()
                .map(|m| self.state.generator.forward(m))
                .collect::<Result<Vec<_>>>()
        })?;
        let d = discriminator_loss(&self.state.bank, &batch.real, &fake, cfg.family, cfg.objective)?;
        let loss = d.loss.item();
        self.check(loss, "discriminator loss")?;
        d.loss.backward()?;
        self.state
            .adam_d
            .step(&self.state.bank.named_params(), lr, self.state.step + 1)?;
        Ok((loss, d.real_logit_means, d.fake_logit_means))
    }

    /// One generator update. Returns `(total, adversarial, fm, mel)`.
    pub fn generator_step(&mut self, batch: &Batch, lr: f64) -> Result<(f64, f64, f64, f64)> {
        let cfg = &self.state.config;
        let fake = batch
            .mels
            .iter()
            .map(|m| self.state.generator.forward(m))
            .collect::<Result<Vec<_>>>()?;
        let g = generator_loss(
            &self.state.bank,
            &self.analyzer,
            &batch.real,
            &fake,
            cfg.family,
            cfg.objective,
            cfg.weights,
        )?;
        let vals = (g.total.item(), g.adv.item(), g.fm.item(), g.mel.item());
        self.check(vals.0, "generator loss")?;
        g.total.backward()?;
        self.state
            .adam_g
            .step(&self.state.generator.named_params(), lr, self.state.step + 1)?;
        // the frozen view leaves the bank without gradients; clear defensively
        self.state.bank.zero_grad();
        Ok(vals)
    }

    pub fn step(&mut self) -> Result<StepLog> {
        let s = self.state.step;
        let lr = self.state.config.lr_at(s);
        let batch = self.batch(s)?;
        let (d_loss, real_logits, fake_logits) = self.discriminator_step(&batch, lr)?;
        let (g_loss, adv, fm, mel) = self.generator_step(&batch, lr)?;
        self.state.step += 1;
        let omega_norms = self
            .state
            .bank
            .discriminators()
            .iter()
            .map(|d| d.omega_norm())
            .collect();
        Ok(StepLog {
            step: self.state.step,
            lr,
            d_loss,
            g_loss,
            adv,
            mel,
            fm,
            real_logits,
            fake_logits,
            omega_norms,
        })
    }

    /// Vocodes clip 0 (the fixed validation clip).
    pub fn sample(&self) -> Result<Waveform> {
        synthesize(&self.state.generator, &self.analyzer, &self.clips[0].wave)
    }

    /// Steps until `config.steps` are complete, writing logs, checkpoints and
    /// samples under `out` when given. On a non-finite loss the logs are
    /// flushed and the error returned; earlier checkpoints stay in place.
    pub fn run(&mut self, out: Option<&Path>) -> Result<Vec<StepLog>> {
        let mut writer = out.map(RunWriter::create).transpose()?;
        let mut history = Vec::new();
        let total = self.state.config.steps;
        while self.state.step < total {
            let log = match self.step() {
                Ok(log) => log,
                Err(e) => {
                    if let Some(w) = writer.as_mut() {
                        w.flush()?;
                    }
                    return Err(e);
                }
            };
            let cfg = &self.state.config;
            let every = cfg.checkpoint_every;
            let periodic = every > 0 && log.step % every == 0;
            if let Some(w) = writer.as_mut() {
                if log.step % cfg.log_every == 0 || log.step == total {
                    w.log(&log)?;
                }
                if periodic || log.step == total {
                    w.flush()?;
                    self.state.save(w.checkpoint_path(log.step))?;
                    wav_write(w.sample_path(log.step), &self.sample()?)?;
                }
            }
            if log.step % cfg.log_every == 0 {
                log::info!(
                    "step {} d {:.4} g {:.4} mel {:.4} fm {:.4}",
                    log.step,
                    log.d_loss,
                    log.g_loss,
                    log.mel,
                    log.fm
                );
            }
            history.push(log);
        }
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
        Ok(history)
    }
}

/// Runs a full training job from scratch.
pub fn train(config: TrainConfig, out: Option<&Path>) -> Result<(TrainState, Vec<StepLog>)> {
    let mut trainer = Trainer::new(config)?;
    let history = trainer.run(out)?;
    Ok((trainer.into_state(), history))
}

pub const LOG_HEADER: [&str; 7] = [
    "step",
    "d_loss",
    "g_loss",
    "mel",
    "fm",
    "real_logit_mean",
    "fake_logit_mean",
];
pub const SCALES_HEADER: [&str; 5] = ["step", "scale", "real_logit_mean", "fake_logit_mean", "omega_norm"];

struct RunWriter {
    dir: PathBuf,
    log: csv::Writer<File>,
    scales: csv::Writer<File>,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

impl RunWriter {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir.join("samples")).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str, header: &[&str]| -> Result<csv::Writer<File>> {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
            w.write_record(header).map_err(|e| csv_err(&path, e))?;
            Ok(w)
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            log: open("log.csv", &LOG_HEADER)?,
            scales: open("scales.csv", &SCALES_HEADER)?,
        })
    }

    fn log(&mut self, l: &StepLog) -> Result<()> {
        let row = [
            l.step.to_string(),
            l.d_loss.to_string(),
            l.g_loss.to_string(),
            l.mel.to_string(),
            l.fm.to_string(),
            l.real_logit_mean().to_string(),
            l.fake_logit_mean().to_string(),
        ];
        let path = self.dir.join("log.csv");
        self.log.write_record(&row).map_err(|e| csv_err(&path, e))?;
        let path = self.dir.join("scales.csv");
        for k in 0..l.real_logits.len() {
            let row = [
                l.step.to_string(),
                k.to_string(),
                l.real_logits[k].to_string(),
                l.fake_logits[k].to_string(),
                l.omega_norms[k].to_string(),
            ];
            self.scales.write_record(&row).map_err(|e| csv_err(&path, e))?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.log.flush().map_err(|e| Error::io(self.dir.join("log.csv"), e))?;
        self.scales
            .flush()
            .map_err(|e| Error::io(self.dir.join("scales.csv"), e))
    }

    fn checkpoint_path(&self, step: u64) -> PathBuf {
        self.dir.join(format!("ckpt_{step:07}.svck"))
    }

    fn sample_path(&self, step: u64) -> PathBuf {
        self.dir.join("samples").join(format!("sample_{step:07}.wav"))
    }
}

/// Checkpoint with the highest step number in `dir`, if any.
pub fn latest_checkpoint(dir: impl AsRef<Path>) -> Result<Option<PathBuf>> {
    let dir = dir.as_ref();
    let mut best: Option<PathBuf> = None;
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("ckpt_") && name.ends_with(".svck") && best.as_ref().is_none_or(|b| path > *b) {
            best = Some(path);
        }
    }
    Ok(best)
}
