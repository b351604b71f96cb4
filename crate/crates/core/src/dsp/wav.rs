use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const SCALE: f64 = 32768.0;

fn wav_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Reads a RIFF/WAVE file holding 16-bit PCM mono samples, scaled by 1/32768.
pub fn wav_read(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(wav_err(path, format!("unsupported channel count {}", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(wav_err(path, "unsupported sample format float (expected PCM)"));
    }
    if spec.bits_per_sample != 16 {
        return Err(wav_err(
            path,
            format!("unsupported bits per sample {}", spec.bits_per_sample),
        ));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_err(path, e.to_string()))?;
    Waveform::new(samples, spec.sample_rate)
}

/// Writes 16-bit PCM mono; samples are rounded and clipped to the i16 range.
pub fn wav_write(path: impl AsRef<Path>, wave: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e.to_string()))?;
    for &s in wave.samples() {
        let q = (s * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(q).map_err(|e| wav_err(path, e.to_string()))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let sr = 24_000;
        let samples: Vec<f64> = (0..2400)
            .map(|n| 0.9 * (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / sr as f64).sin())
            .collect();
        let w = Waveform::new(samples, sr).unwrap();
        wav_write(&path, &w).unwrap();
        let r = wav_read(&path).unwrap();
        assert_eq!(r.sample_rate(), sr);
        assert_eq!(r.len(), w.len());
        let max_err = w
            .samples()
            .iter()
            .zip(r.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.0 / 32768.0, "{max_err}");
    }

    #[test]
    fn empty_data_chunk_reads_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        wav_write(&path, &Waveform::new(vec![], 16_000).unwrap()).unwrap();
        let r = wav_read(&path).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn full_scale_clips_to_i16() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        wav_write(&path, &Waveform::new(vec![1.0, -1.0], 8000).unwrap()).unwrap();
        let r = wav_read(&path).unwrap();
        assert_eq!(r.samples(), &[32767.0 / 32768.0, -1.0]);
    }

    #[test]
    fn stereo_rejected_with_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..8 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let err = wav_read(&path).unwrap_err().to_string();
        assert!(err.contains("unsupported channel count 2"), "{err}");
    }

    #[test]
    fn eight_bit_rejected_naming_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(0i8).unwrap();
        w.finalize().unwrap();
        let err = wav_read(&path).unwrap_err().to_string();
        assert!(err.contains("bits per sample 8"), "{err}");
    }

    #[test]
    fn garbage_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"not a wav file at all").unwrap();
        assert!(wav_read(&path).is_err());
    }
}
