//! Windows, magnitude STFT, mel filterbanks, log-mel spectrograms and WAV I/O.

mod mel;
mod stft;
mod wav;

pub use mel::{
    hz_to_mel, log_mel, mel_band_edges, mel_filterbank, mel_to_hz, MelAnalyzer, MelParams, MelSpec, MEL_FLOOR,
};
pub use stft::{hann_window, Stft, StftConfig};
pub use wav::{wav_read, wav_write};

use crate::error::{Error, Result};

/// Mono audio in [−1, 1] with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("waveform", "sample rate must be positive"));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(Error::invalid(
                "waveform",
                format!("sample {i} = {s} is not a finite value in [-1, 1]"),
            ));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}
