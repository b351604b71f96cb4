// A short adversarial training run on synthetic harmonic audio, with a
// checkpoint and a vocoded validation clip written to a temp directory.
// Pass a step count to train longer: `cargo run --release --example toy_training -- 2000`.

use lssan::trainer::{latest_checkpoint, TrainConfig, Trainer};

fn run(steps: u64) -> lssan::Result<()> {
    let mut cfg = TrainConfig::toy();
    cfg.steps = steps;
    cfg.log_every = (steps / 10).max(1);
    cfg.checkpoint_every = steps;
    if steps < 100 {
        // shrink everything for a quick demonstration
        cfg.generator.channels = vec![16, 8, 8, 4];
        cfg.discriminator.channels = vec![4, 8, 8, 8];
        cfg.data.num_clips = 4;
        cfg.data.clip_len = 2048;
        cfg.segment = 1024;
    }
    let out = std::env::temp_dir().join("lssan_toy_training");
    let mut trainer = Trainer::new(cfg)?;
    let history = trainer.run(Some(&out))?;
    for log in history.iter().filter(|l| l.step % trainer.config().log_every == 0) {
        println!(
            "step {:>5}  d {:>9.4}  g {:>9.4}  mel {:.4}  fm {:.4}",
            log.step, log.d_loss, log.g_loss, log.mel, log.fm
        );
    }
    if let Some(ckpt) = latest_checkpoint(&out)? {
        println!("checkpoint: {}", ckpt.display());
    }
    Ok(())
}

pub fn run_example() -> lssan::Result<()> {
    run(20)
}

#[allow(dead_code)]
fn main() {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    run(steps).expect("toy training example failed");
}
