// Track the pitch of a gliding tone and show the voicing decision on noise
// and silence.

use lssan::dsp::Waveform;
use lssan::metrics::{pitch_voicing, PitchConfig};

pub fn run_example() -> lssan::Result<()> {
    let sr = 16_000;
    let n = sr as usize;
    // glide from 120 Hz to 300 Hz, then half a second of silence
    let mut phase = 0.0;
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let f = 120.0 + 180.0 * i as f64 / n as f64;
            phase += 2.0 * std::f64::consts::PI * f / sr as f64;
            0.5 * phase.sin()
        })
        .collect();
    x.extend(std::iter::repeat_n(0.0, n / 2));
    let cfg = PitchConfig::for_rate(sr);
    let track = pitch_voicing(&Waveform::new(x, sr)?, &cfg)?;
    println!(
        "{} frames, hop {} samples, {:.0}% voiced",
        track.len(),
        cfg.hop,
        100.0 * track.voiced_fraction()
    );
    for i in (0..track.len()).step_by(12) {
        println!(
            "t = {:.2}s  f0 = {:>6.1} Hz  periodicity {:.3}  voiced {}",
            (i * cfg.hop + cfg.frame / 2) as f64 / sr as f64,
            track.f0[i],
            track.periodicity[i],
            track.voiced[i]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pitch tracking example failed");
}
