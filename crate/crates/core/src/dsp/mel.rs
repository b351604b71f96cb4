use ndarray::Array2;

use super::stft::{Stft, StftConfig};
use super::Waveform;
use crate::error::{Error, Result};
use crate::grad::{no_grad, Tensor};

/// Clamp applied to mel energies before the log.
pub const MEL_FLOOR: f64 = 1e-5;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Analysis parameters of a log-mel spectrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelParams {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub win_length: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelParams {
    /// 24 kHz, 1024-point FFT and window, hop 256, 100 bands over 0–12 kHz.
    fn default() -> Self {
        Self {
            sample_rate: 24_000,
            n_fft: 1024,
            win_length: 1024,
            hop: 256,
            n_mels: 100,
            fmin: 0.0,
            fmax: 12_000.0,
        }
    }
}

impl MelParams {
    pub fn stft_config(&self) -> StftConfig {
        StftConfig::new(self.n_fft, self.hop, self.win_length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("mel", "sample rate must be positive"));
        }
        if self.n_mels == 0 {
            return Err(Error::invalid("mel", "n_mels must be at least 1"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(0.0 <= self.fmin && self.fmin < self.fmax) {
            return Err(Error::invalid(
                "mel",
                format!("need 0 <= fmin < fmax, got fmin {} fmax {}", self.fmin, self.fmax),
            ));
        }
        if self.fmax > nyquist {
            return Err(Error::invalid(
                "mel",
                format!("fmax {} exceeds the Nyquist frequency {nyquist}", self.fmax),
            ));
        }
        Ok(())
    }
}

/// Area-normalized triangular filters on the 2595·log10(1 + f/700) mel
/// scale, shape `[n_mels × (n_fft/2 + 1)]`.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32, fmin: f64, fmax: f64) -> Result<Array2<f64>> {
    MelParams {
        sample_rate,
        n_fft,
        win_length: n_fft,
        hop: 1,
        n_mels,
        fmin,
        fmax,
    }
    .validate()?;
    let bins = n_fft / 2 + 1;
    let hz = mel_band_edges(n_mels, fmin, fmax);
    let bin_hz: Vec<f64> = (0..bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();
    let mut fb = Array2::zeros((n_mels, bins));
    let mut empty = 0;
    for m in 0..n_mels {
        let (lo, c, hi) = (hz[m], hz[m + 1], hz[m + 2]);
        let norm = 2.0 / (hi - lo);
        for (k, &f) in bin_hz.iter().enumerate() {
            let rise = (f - lo) / (c - lo);
            let fall = (hi - f) / (hi - c);
            let w = rise.min(fall).max(0.0);
            fb[[m, k]] = w * norm;
        }
        if fb.row(m).iter().all(|&w| w == 0.0) {
            empty += 1;
        }
    }
    if empty > 0 {
        log::warn!("{empty} of {n_mels} mel filters cover no FFT bin (n_fft {n_fft} too small for {n_mels} bands)");
    }
    Ok(fb)
}

/// `n_mels + 2` band edges in Hz, equally spaced on the mel scale.
pub fn mel_band_edges(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Log-mel frames with the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpec {
    /// `[n_mels × frames]`.
    pub frames: Array2<f64>,
    pub params: MelParams,
}

impl MelSpec {
    pub fn n_frames(&self) -> usize {
        self.frames.ncols()
    }

    pub fn n_mels(&self) -> usize {
        self.frames.nrows()
    }

    /// Constant `[n_mels × frames]` tensor.
    pub fn to_tensor(&self) -> Tensor {
        let data = self.frames.iter().copied().collect();
        Tensor::new(data, &[self.n_mels(), self.n_frames()]).expect("shape matches")
    }

    /// Keeps the first `n` frames.
    pub fn truncated(&self, n: usize) -> MelSpec {
        let n = n.min(self.n_frames());
        MelSpec {
            frames: self.frames.slice(ndarray::s![.., ..n]).to_owned(),
            params: self.params,
        }
    }
}

/// Precomputed STFT plan and filterbank for one set of [`MelParams`].
#[derive(Debug, Clone)]
pub struct MelAnalyzer {
    params: MelParams,
    stft: Stft,
    filterbank: Tensor,
}

impl MelAnalyzer {
    pub fn new(params: MelParams) -> Result<Self> {
        params.validate()?;
        let stft = Stft::new(params.stft_config())?;
        let fb = mel_filterbank(
            params.n_mels,
            params.n_fft,
            params.sample_rate,
            params.fmin,
            params.fmax,
        )?;
        let shape = [fb.nrows(), fb.ncols()];
        let filterbank = Tensor::new(fb.into_iter().collect(), &shape)?;
        Ok(Self {
            params,
            stft,
            filterbank,
        })
    }

    pub fn params(&self) -> &MelParams {
        &self.params
    }

    /// `log(max(FB·|STFT(x)|, 1e-5))` for a rank-1 signal; differentiable.
    pub fn log_mel(&self, x: &Tensor) -> Result<Tensor> {
        let mag = self.stft.magnitude(x)?;
        Ok(self.filterbank.matmul(&mag)?.clamp_min(MEL_FLOOR).log())
    }

    pub fn log_mel_spec(&self, wave: &Waveform) -> Result<MelSpec> {
        if wave.sample_rate() != self.params.sample_rate {
            return Err(Error::invalid(
                "log_mel",
                format!(
                    "waveform sample rate {} does not match analysis rate {}",
                    wave.sample_rate(),
                    self.params.sample_rate
                ),
            ));
        }
        let t = no_grad(|| self.log_mel(&Tensor::from_vec(wave.samples().to_vec())))?;
        let shape = (t.shape()[0], t.shape()[1]);
        let frames = Array2::from_shape_vec(shape, t.to_vec()).expect("shape matches");
        Ok(MelSpec {
            frames,
            params: self.params,
        })
    }
}

/// One-shot log-mel of a waveform.
pub fn log_mel(wave: &Waveform, params: MelParams) -> Result<MelSpec> {
    MelAnalyzer::new(params)?.log_mel_spec(wave)
}
