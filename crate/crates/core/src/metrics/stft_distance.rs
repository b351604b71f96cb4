use crate::dsp::{Stft, StftConfig, Waveform};
use crate::error::{Error, Result};

/// One STFT analysis setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
}

pub const DEFAULT_RESOLUTIONS: [Resolution; 3] = [
    Resolution {
        n_fft: 512,
        hop: 50,
        win_length: 240,
    },
    Resolution {
        n_fft: 1024,
        hop: 120,
        win_length: 600,
    },
    Resolution {
        n_fft: 2048,
        hop: 240,
        win_length: 1200,
    },
];

/// Floor applied to magnitudes before both distance terms.
pub const MAG_FLOOR: f64 = 1e-7;

pub(crate) fn same_rate(op: &'static str, x: &Waveform, y: &Waveform) -> Result<()> {
    if x.sample_rate() != y.sample_rate() {
        return Err(Error::invalid(
            op,
            format!("sample rates differ: {} vs {}", x.sample_rate(), y.sample_rate()),
        ));
    }
    Ok(())
}

/// Spectral convergence and mean log-magnitude L1 at one resolution, with
/// `x` as the reference. Inputs are truncated to the shorter length.
pub fn stft_distance_terms(x: &Waveform, y: &Waveform, res: Resolution) -> Result<(f64, f64)> {
    same_rate("mstft", x, y)?;
    let n = x.len().min(y.len());
    let stft = Stft::new(StftConfig::new(res.n_fft, res.hop, res.win_length))?;
    let (mx, _) = stft.magnitude_of(&x.samples()[..n])?;
    let (my, _) = stft.magnitude_of(&y.samples()[..n])?;
    let (mut diff2, mut ref2, mut log_l1) = (0.0, 0.0, 0.0);
    for (&a, &b) in mx.iter().zip(&my) {
        let (a, b) = (a.max(MAG_FLOOR), b.max(MAG_FLOOR));
        diff2 += (a - b) * (a - b);
        ref2 += a * a;
        log_l1 += (a.ln() - b.ln()).abs();
    }
    Ok((diff2.sqrt() / ref2.sqrt(), log_l1 / mx.len() as f64))
}

/// Multi-resolution STFT distance: spectral convergence plus log-magnitude
/// L1, averaged over `resolutions`.
pub fn mstft(x: &Waveform, y: &Waveform, resolutions: &[Resolution]) -> Result<f64> {
    if resolutions.is_empty() {
        return Err(Error::invalid("mstft", "no resolutions given"));
    }
    let mut total = 0.0;
    for &r in resolutions {
        let (sc, lm) = stft_distance_terms(x, y, r)?;
        total += sc + lm;
    }
    Ok(total / resolutions.len() as f64)
}
