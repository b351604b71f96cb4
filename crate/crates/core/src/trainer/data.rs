use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::DatasetSpec;
use crate::dsp::{MelAnalyzer, MelParams, MelSpec, Waveform};
use crate::error::{Error, Result};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Clip = 1,
    Epoch = 2,
    Offsets = 3,
    Init = 4,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

/// One training clip with its log-mel frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub wave: Waveform,
    pub mel: MelSpec,
    pub f0: f64,
    pub harmonics: usize,
}

impl DatasetSpec {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let limit = sample_rate as f64 / 16.0;
        if !(self.f0_min > 0.0 && self.f0_min <= self.f0_max && self.f0_max < limit) {
            return Err(Error::invalid(
                "synth_dataset",
                format!(
                    "f0 range [{}, {}] Hz must lie within (0, {limit}) (an eighth of Nyquist)",
                    self.f0_min, self.f0_max
                ),
            ));
        }
        if self.harmonics_min == 0 || self.harmonics_min > self.harmonics_max {
            return Err(Error::invalid(
                "synth_dataset",
                format!(
                    "harmonic range [{}, {}] is empty",
                    self.harmonics_min, self.harmonics_max
                ),
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(
                "synth_dataset",
                format!("noise level {} must be >= 0", self.noise),
            ));
        }
        if self.num_clips == 0 || self.clip_len == 0 {
            return Err(Error::invalid("synth_dataset", "need at least one non-empty clip"));
        }
        Ok(())
    }
}

/// Peak level after normalization.
pub const PEAK: f64 = 0.95;

/// Harmonic tone with 1/h amplitudes, random phases, fade-in/out and a slow
/// tremolo, plus Gaussian noise; peak-normalized to [`PEAK`].
fn synth_clip(spec: &DatasetSpec, sample_rate: u32, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, usize) {
    let sr = sample_rate as f64;
    let n = spec.clip_len;
    let f0 = rng.random_range(spec.f0_min..=spec.f0_max);
    let harmonics = rng.random_range(spec.harmonics_min..=spec.harmonics_max);
    let partials: Vec<(f64, f64, f64)> = (1..=harmonics)
        .map(|h| (h as f64, 1.0 / h as f64, rng.random_range(0.0..2.0 * PI)))
        .filter(|&(h, _, _)| h * f0 < 0.45 * sr)
        .collect();
    let trem_rate = rng.random_range(0.5..3.0);
    let trem_phase = rng.random_range(0.0..2.0 * PI);
    let fade = (n / 10).max(1);

    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let tone: f64 = partials
                .iter()
                .map(|&(h, a, p)| a * (2.0 * PI * h * f0 * t + p).sin())
                .sum();
            let edge = i.min(n - 1 - i);
            let ramp = if edge < fade {
                0.5 - 0.5 * (PI * edge as f64 / fade as f64).cos()
            } else {
                1.0
            };
            let trem = 1.0 + 0.3 * (2.0 * PI * trem_rate * t + trem_phase).sin();
            tone * ramp * trem
        })
        .collect();

    if spec.noise > 0.0 {
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let dist = Normal::new(0.0, spec.noise * rms.max(1e-12)).expect("positive std");
        for v in &mut x {
            *v += dist.sample(rng);
        }
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = PEAK / peak;
        x.iter_mut().for_each(|v| *v *= g);
    }
    (x, f0, partials.len())
}

fn build_clip(spec: &DatasetSpec, audio: &MelParams, analyzer: &MelAnalyzer, seed: u64, i: usize) -> Result<Clip> {
    let mut rng = stream_rng(seed, Stream::Clip, i as u64);
    let (samples, f0, harmonics) = synth_clip(spec, audio.sample_rate, &mut rng);
    let wave = Waveform::new(samples, audio.sample_rate)?;
    let mel = analyzer.log_mel_spec(&wave)?;
    Ok(Clip {
        wave,
        mel,
        f0,
        harmonics,
    })
}

/// Deterministic synthetic dataset; clip `i` depends only on `(seed, i)`, so
/// the parallel mode yields the same clips in the same order.
pub fn synth_dataset(spec: &DatasetSpec, audio: &MelParams, seed: u64) -> Result<Vec<Clip>> {
    spec.validate(audio.sample_rate)?;
    if !spec.parallel {
        let analyzer = MelAnalyzer::new(*audio)?;
        return (0..spec.num_clips)
            .map(|i| build_clip(spec, audio, &analyzer, seed, i))
            .collect();
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(spec.num_clips);
    let chunks: Vec<Result<Vec<Clip>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    let analyzer = MelAnalyzer::new(*audio)?;
                    (w..spec.num_clips)
                        .step_by(workers)
                        .map(|i| build_clip(spec, audio, &analyzer, seed, i))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("synthesis worker panicked"))
            .collect()
    });
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    let mut iters: Vec<_> = chunks.into_iter().map(Vec::into_iter).collect();
    Ok((0..spec.num_clips)
        .map(|i| iters[i % workers].next().expect("round-robin split"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn audio() -> MelParams {
        MelParams {
            sample_rate: 8000,
            n_fft: 256,
            win_length: 256,
            hop: 64,
            n_mels: 32,
            fmin: 0.0,
            fmax: 4000.0,
        }
    }

    fn spec() -> DatasetSpec {
        DatasetSpec {
            num_clips: 5,
            clip_len: 2000,
            f0_min: 100.0,
            f0_max: 400.0,
            harmonics_min: 1,
            harmonics_max: 5,
            noise: 0.05,
            parallel: false,
        }
    }

    #[test]
    fn same_seed_same_data_and_parallel_agrees() {
        let a = synth_dataset(&spec(), &audio(), 3).unwrap();
        let b = synth_dataset(&spec(), &audio(), 3).unwrap();
        assert_eq!(a, b);
        let par = synth_dataset(
            &DatasetSpec {
                parallel: true,
                ..spec()
            },
            &audio(),
            3,
        )
        .unwrap();
        assert_eq!(a, par);
        let c = synth_dataset(&spec(), &audio(), 4).unwrap();
        assert_ne!(a[0].wave, c[0].wave);
    }

    #[test]
    fn peak_normalized() {
        for clip in synth_dataset(&spec(), &audio(), 9).unwrap() {
            assert!((clip.wave.peak() - PEAK).abs() < 1e-6);
            assert_eq!(clip.mel.n_frames(), 1 + 2000 / 64);
        }
    }

    #[test]
    fn range_checks() {
        let bad_f0 = DatasetSpec {
            f0_max: 600.0,
            ..spec()
        };
        assert!(synth_dataset(&bad_f0, &audio(), 0).is_err());
        let bad_h = DatasetSpec {
            harmonics_min: 0,
            ..spec()
        };
        assert!(synth_dataset(&bad_h, &audio(), 0).is_err());
    }
}
