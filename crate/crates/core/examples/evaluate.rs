// Score degraded copies of a tone against the clean reference with all four
// objective metrics, then run the directory-level evaluation.

use lssan::dsp::{wav_write, Waveform};
use lssan::metrics::{evaluate_pair, evaluate_pairs, EvalConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn tone(sr: u32, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            (1..=4)
                .map(|h| 0.3 / h as f64 * (2.0 * std::f64::consts::PI * 180.0 * h as f64 * t).sin())
                .sum()
        })
        .collect()
}

pub fn run_example() -> lssan::Result<()> {
    let sr = 16_000;
    let clean = tone(sr, sr as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = EvalConfig::default();
    let reference = Waveform::new(clean.clone(), sr)?;

    let names: Vec<String> = cfg.metrics.iter().map(|m| format!("{:>12}", m.name())).collect();
    println!("{:<14}{}", "noise std", names.join(""));
    let dir = std::env::temp_dir().join("lssan_evaluate");
    let (rdir, ddir) = (dir.join("ref"), dir.join("deg"));
    for d in [&rdir, &ddir] {
        std::fs::create_dir_all(d).map_err(|e| lssan::Error::Io {
            path: d.to_path_buf(),
            source: e,
        })?;
    }
    for (i, std) in [0.0f64, 0.01, 0.05, 0.2].into_iter().enumerate() {
        let noise = Normal::new(0.0, std.max(1e-12)).expect("valid std");
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| (v + noise.sample(&mut rng)).clamp(-1.0, 1.0))
            .collect();
        let degraded = Waveform::new(noisy, sr)?;
        let values = evaluate_pair(&reference, &degraded, &cfg)?;
        let cells: Vec<String> = values.iter().map(|v| format!("{v:>12.4}")).collect();
        println!("{std:<14}{}", cells.join(""));
        wav_write(rdir.join(format!("clip{i}.wav")), &reference)?;
        wav_write(ddir.join(format!("clip{i}.wav")), &degraded)?;
    }

    let report = evaluate_pairs(&rdir, &ddir, &cfg)?;
    report.write_csv(dir.join("metrics.csv"))?;
    println!(
        "{} files evaluated, macro averages {:?}",
        report.file_count(),
        report.macro_avg
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("evaluation example failed");
}
