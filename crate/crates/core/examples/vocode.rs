// Vocode a WAV file: compute its log-mel and run a generator over it. With
// no checkpoint argument a freshly initialized generator is used, so the
// output is noise-like but has the right length and sample rate.
// `cargo run --release --example vocode -- ckpt.svck in.wav out.wav`

use std::path::PathBuf;

use lssan::dsp::{wav_read, wav_write, MelAnalyzer, Waveform};
use lssan::metrics::{mstft, DEFAULT_RESOLUTIONS};
use lssan::trainer::{checkpoint_load, synthesize, TrainConfig, TrainState};

fn vocode(state: &TrainState, input: &Waveform) -> lssan::Result<Waveform> {
    let analyzer = MelAnalyzer::new(state.config.audio)?;
    synthesize(&state.generator, &analyzer, input)
}

pub fn run_example() -> lssan::Result<()> {
    let cfg = TrainConfig::toy();
    let sr = cfg.audio.sample_rate;
    let input = Waveform::new(
        (0..sr as usize)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 200.0 * i as f64 / sr as f64).sin())
            .collect(),
        sr,
    )?;
    let state = TrainState::init(cfg)?;
    let out = vocode(&state, &input)?;
    println!(
        "{} input samples -> {} output samples, peak {:.3}, mstft {:.3}",
        input.len(),
        out.len(),
        out.peak(),
        mstft(&input, &out, &DEFAULT_RESOLUTIONS[..1])?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let result = match args.as_slice() {
        [ckpt, input, output] => checkpoint_load(ckpt).and_then(|state| {
            let y = vocode(&state, &wav_read(input)?)?;
            wav_write(output, &y)
        }),
        _ => run_example(),
    };
    result.expect("vocode example failed");
}
