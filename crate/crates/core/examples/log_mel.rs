// Log-mel analysis of a two-tone signal, plus a WAV round trip.

use lssan::dsp::{log_mel, wav_read, wav_write, MelParams, Waveform};

pub fn run_example() -> lssan::Result<()> {
    let sr = 24_000;
    let samples = (0..sr as usize)
        .map(|i| {
            let t = i as f64 / sr as f64;
            0.4 * (2.0 * std::f64::consts::PI * 440.0 * t).sin() + 0.2 * (2.0 * std::f64::consts::PI * 3000.0 * t).sin()
        })
        .collect();
    let wave = Waveform::new(samples, sr)?;
    let params = MelParams::default();
    let mel = log_mel(&wave, params)?;
    println!(
        "{} mel bands x {} frames (hop {})",
        mel.n_mels(),
        mel.n_frames(),
        params.hop
    );

    let mid = mel.n_frames() / 2;
    let column: Vec<f64> = (0..mel.n_mels()).map(|m| mel.frames[[m, mid]]).collect();
    let loudest = column
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    println!(
        "loudest band in the middle frame: {loudest} ({:.2} log units)",
        column[loudest]
    );

    let dir = std::env::temp_dir().join("lssan_log_mel_example");
    std::fs::create_dir_all(&dir).map_err(|e| lssan::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("two_tones.wav");
    wav_write(&path, &wave)?;
    let back = wav_read(&path)?;
    let err = wave
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("16-bit round trip max error: {err:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("log-mel example failed");
}
