use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Frame-wise f0, voicing and periodicity.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    /// Hz; 0 for unvoiced frames.
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Peak normalized autocorrelation in [0, 1].
    pub periodicity: Vec<f64>,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            return 0.0;
        }
        self.voiced.iter().filter(|&&v| v).count() as f64 / self.voiced.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    /// Analysis frame length in samples.
    pub frame: usize,
    pub hop: usize,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Minimum periodicity of a voiced frame.
    pub vthresh: f64,
}

/// Frames quieter than this RMS (−60 dBFS) are unvoiced.
pub const RMS_GATE: f64 = 1e-3;

/// Candidate peaks within this fraction of the global maximum compete; the
/// shortest lag among them wins, which avoids octave-down errors.
const PEAK_TOLERANCE: f64 = 0.9;

impl PitchConfig {
    /// 50–550 Hz, 10 ms hop, frames of three longest periods.
    pub fn for_rate(sample_rate: u32) -> Self {
        let f0_min = 50.0;
        let f0_max = 550.0f64.min(sample_rate as f64 / 4.0);
        Self {
            frame: (3.0 * sample_rate as f64 / f0_min).ceil() as usize,
            hop: (sample_rate as usize / 100).max(1),
            f0_min,
            f0_max,
            vthresh: 0.5,
        }
    }

    fn lag_range(&self, sample_rate: u32) -> Result<(usize, usize)> {
        let sr = sample_rate as f64;
        if !(self.f0_min >= 50.0 && self.f0_min < self.f0_max && self.f0_max <= sr / 4.0) {
            return Err(Error::invalid(
                "pitch_voicing",
                format!(
                    "f0 range [{}, {}] must satisfy 50 <= f0_min < f0_max <= {}",
                    self.f0_min,
                    self.f0_max,
                    sr / 4.0
                ),
            ));
        }
        let lo = (sr / self.f0_max).floor().max(2.0) as usize;
        let hi = (sr / self.f0_min).ceil() as usize;
        if hi + 2 >= self.frame {
            return Err(Error::invalid(
                "pitch_voicing",
                format!("frame {} is too short for lags up to {hi}", self.frame),
            ));
        }
        Ok((lo, hi))
    }
}

/// Normalized autocorrelation `r(τ)` for `τ ∈ [lo, hi]` of one frame.
fn autocorr(frame: &[f64], lo: usize, hi: usize, prefix: &[f64]) -> Vec<f64> {
    let w = frame.len();
    (lo..=hi)
        .map(|tau| {
            let n = w - tau;
            let dot: f64 = frame[..n].iter().zip(&frame[tau..]).map(|(a, b)| a * b).sum();
            let e0 = prefix[n];
            let e1 = prefix[w] - prefix[tau];
            let den = (e0 * e1).sqrt();
            if den > 0.0 {
                dot / den
            } else {
                0.0
            }
        })
        .collect()
}

/// Autocorrelation pitch tracker over non-padded frames.
pub fn pitch_voicing(x: &Waveform, cfg: &PitchConfig) -> Result<PitchTrack> {
    let sr = x.sample_rate();
    let (lo, hi) = cfg.lag_range(sr)?;
    if cfg.hop == 0 {
        return Err(Error::invalid("pitch_voicing", "hop must be positive"));
    }
    if cfg.frame > x.len() {
        return Err(Error::invalid(
            "pitch_voicing",
            format!("frame of {} samples is longer than the signal ({})", cfg.frame, x.len()),
        ));
    }
    let n_frames = 1 + (x.len() - cfg.frame) / cfg.hop;
    let mut track = PitchTrack {
        f0: Vec::with_capacity(n_frames),
        voiced: Vec::with_capacity(n_frames),
        periodicity: Vec::with_capacity(n_frames),
    };
    let mut prefix = vec![0.0; cfg.frame + 1];
    for f in 0..n_frames {
        let frame = &x.samples()[f * cfg.hop..f * cfg.hop + cfg.frame];
        for (i, v) in frame.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v * v;
        }
        let rms = (prefix[cfg.frame] / cfg.frame as f64).sqrt();
        // one extra lag on each side for the local-max test and interpolation
        let r = autocorr(frame, lo - 1, hi + 1, &prefix);
        let inner = &r[1..r.len() - 1];
        let peak = inner.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let periodicity = peak.clamp(0.0, 1.0);
        let voiced = periodicity >= cfg.vthresh && rms >= RMS_GATE;
        let mut f0 = 0.0;
        if voiced {
            let i = (1..r.len() - 1)
                .find(|&i| r[i] >= PEAK_TOLERANCE * peak && r[i] >= r[i - 1] && r[i] >= r[i + 1])
                .expect("the global maximum is a local maximum");
            let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
            let den = a - 2.0 * b + c;
            let shift = if den.abs() > 1e-12 {
                (0.5 * (a - c) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let tau = (lo - 1 + i) as f64 + shift;
            f0 = (sr as f64 / tau).clamp(cfg.f0_min, cfg.f0_max);
        }
        track.f0.push(f0);
        track.voiced.push(voiced);
        track.periodicity.push(periodicity);
    }
    Ok(track)
}

fn same_frames(op: &'static str, a: &PitchTrack, b: &PitchTrack) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(
            op,
            format!("frame counts differ: {} vs {}", a.len(), b.len()),
        ));
    }
    Ok(())
}

/// RMSE of the periodicity values over all frames.
pub fn periodicity_error(reference: &PitchTrack, degraded: &PitchTrack) -> Result<f64> {
    same_frames("periodicity_error", reference, degraded)?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    let se: f64 = reference
        .periodicity
        .iter()
        .zip(&degraded.periodicity)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((se / reference.len() as f64).sqrt())
}

/// F1 of the degraded voicing decisions against the reference (voiced is the
/// positive class). Two tracks with no voiced frames agree perfectly: 1.0.
pub fn vuv_f1(reference: &PitchTrack, degraded: &PitchTrack) -> Result<f64> {
    same_frames("vuv_f1", reference, degraded)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&r, &d) in reference.voiced.iter().zip(&degraded.voiced) {
        match (r, d) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let den = 2 * tp + fp + fn_;
    Ok(if den == 0 { 1.0 } else { 2.0 * tp as f64 / den as f64 })
}
