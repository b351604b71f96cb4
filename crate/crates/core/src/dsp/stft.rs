use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grad::{CustomOp, PadMode, Tensor};

/// Periodic Hann window, `w[k] = 0.5·(1 − cos(2πk/n))`.
pub fn hann_window(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("hann_window", "length must be at least 1"));
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    Ok((0..n).map(|k| 0.5 * (1.0 - (step * k as f64).cos())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    /// Reflect-pad by `n_fft/2` on both sides before framing.
    pub center: bool,
}

impl StftConfig {
    pub fn new(n_fft: usize, hop: usize, win_length: usize) -> Self {
        Self {
            n_fft,
            hop,
            win_length,
            center: true,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frame count for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        let padded = if self.center { len + self.n_fft } else { len };
        if padded < self.n_fft {
            0
        } else {
            (padded - self.n_fft) / self.hop + 1
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() {
            return Err(Error::invalid(
                "stft",
                format!("n_fft {} is not a power of two", self.n_fft),
            ));
        }
        if self.win_length == 0 || self.win_length > self.n_fft {
            return Err(Error::invalid(
                "stft",
                format!("win_length {} must be in 1..={}", self.win_length, self.n_fft),
            ));
        }
        if self.hop == 0 {
            return Err(Error::invalid("stft", "hop must be at least 1"));
        }
        Ok(())
    }
}

/// Magnitude STFT with a Hann window, reusable across calls.
#[derive(Clone)]
pub struct Stft {
    cfg: StftConfig,
    window: Arc<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("cfg", &self.cfg).finish()
    }
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        Self::with_window(cfg, hann_window(cfg.win_length.max(1))?)
    }

    /// Uses `window` (length `win_length`), centered and zero-padded to `n_fft`.
    pub fn with_window(cfg: StftConfig, window: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if window.len() != cfg.win_length {
            return Err(Error::invalid(
                "stft",
                format!("window has {} taps, win_length is {}", window.len(), cfg.win_length),
            ));
        }
        let offset = (cfg.n_fft - cfg.win_length) / 2;
        let mut padded = vec![0.0; cfg.n_fft];
        padded[offset..offset + cfg.win_length].copy_from_slice(&window);
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self {
            cfg,
            window: Arc::new(padded),
            fft,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    /// `|STFT(x)|` of a rank-1 signal, shape `[n_fft/2+1 × frames]`.
    /// Differentiable with respect to `x`.
    pub fn magnitude(&self, x: &Tensor) -> Result<Tensor> {
        if x.rank() != 1 || x.numel() == 0 {
            return Err(Error::invalid(
                "stft",
                format!("expected a non-empty 1-D signal, got shape {:?}", x.shape()),
            ));
        }
        let n_fft = self.cfg.n_fft;
        let framed = if self.cfg.center {
            x.pad1d(n_fft / 2, n_fft / 2, PadMode::Reflect)?
        } else {
            x.clone()
        };
        let len = framed.numel();
        if len < n_fft {
            return Err(Error::invalid(
                "stft",
                format!("signal of {len} samples is shorter than n_fft {n_fft}"),
            ));
        }
        let frames = (len - n_fft) / self.cfg.hop + 1;
        let bins = self.cfg.n_bins();
        let keep = framed.requires_grad();
        let mut spectra = if keep {
            Vec::with_capacity(bins * frames)
        } else {
            Vec::new()
        };
        let mut mags = vec![0.0; bins * frames];
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        {
            let xd = framed.data();
            for f in 0..frames {
                let seg = &xd[f * self.cfg.hop..f * self.cfg.hop + n_fft];
                for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(self.window.iter()) {
                    *b = Complex::new(s * w, 0.0);
                }
                self.fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..bins {
                    mags[k * frames + f] = buf[k].norm();
                }
                if keep {
                    spectra.extend_from_slice(&buf[..bins]);
                }
            }
        }
        let op = StftMagnitudeOp {
            n_fft,
            hop: self.cfg.hop,
            frames,
            window: Arc::clone(&self.window),
            fft: Arc::clone(&self.fft),
            spectra,
        };
        Tensor::from_custom(mags, &[bins, frames], vec![framed], Box::new(op))
    }

    /// Plain-valued convenience wrapper: row-major `[bins × frames]`.
    pub fn magnitude_of(&self, samples: &[f64]) -> Result<(Vec<f64>, usize)> {
        let t = crate::grad::no_grad(|| self.magnitude(&Tensor::from_vec(samples.to_vec())))?;
        let frames = t.shape()[1];
        Ok((t.to_vec(), frames))
    }
}

struct StftMagnitudeOp {
    n_fft: usize,
    hop: usize,
    frames: usize,
    window: Arc<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
    /// Frame-major complex spectra, `bins` per frame.
    spectra: Vec<Complex<f64>>,
}

impl CustomOp for StftMagnitudeOp {
    fn name(&self) -> &'static str {
        "stft_magnitude"
    }

    // d|X_k|/dx_n = w_n·Re(conj(X_k)·e^{-2πikn/N})/|X_k|; the sum over k is a
    // forward DFT of the weighted conjugate spectrum.
    fn backward(&self, parents: &[Tensor], _output: &[f64], grad_out: &[f64]) -> Vec<Option<Vec<f64>>> {
        let n = self.n_fft;
        let bins = n / 2 + 1;
        let mut gx = vec![0.0; parents[0].numel()];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for f in 0..self.frames {
            buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
            let spec = &self.spectra[f * bins..(f + 1) * bins];
            for (k, x) in spec.iter().enumerate() {
                let m = x.norm();
                if m > 0.0 {
                    buf[k] = x.conj() * (grad_out[k * self.frames + f] / m);
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            let dst = &mut gx[f * self.hop..f * self.hop + n];
            for ((g, b), &w) in dst.iter_mut().zip(&buf).zip(self.window.iter()) {
                *g += w * b.re;
            }
        }
        vec![Some(gx)]
    }
}
