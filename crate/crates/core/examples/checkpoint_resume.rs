// Save a training state, reload it, and check that the resumed run lands on
// exactly the same parameters as the uninterrupted one.

use lssan::nets::NamedParams;
use lssan::trainer::{checkpoint_load, checkpoint_save, TrainConfig, Trainer};

fn small_config() -> TrainConfig {
    let mut cfg = TrainConfig::toy();
    cfg.generator.channels = vec![16, 8, 8, 4];
    cfg.discriminator.channels = vec![4, 8, 8, 8];
    cfg.data.num_clips = 4;
    cfg.data.clip_len = 2048;
    cfg.segment = 512;
    cfg.seed = 11;
    cfg
}

pub fn run_example() -> lssan::Result<()> {
    let path = std::env::temp_dir().join("lssan_checkpoint_example.svck");

    let mut straight = Trainer::new(small_config())?;
    for _ in 0..6 {
        straight.step()?;
    }

    let mut first = Trainer::new(small_config())?;
    for _ in 0..3 {
        first.step()?;
    }
    checkpoint_save(first.state(), &path)?;
    let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("saved step {} ({size} bytes)", first.state().step);

    let mut resumed = Trainer::from_state(checkpoint_load(&path)?)?;
    for _ in 0..3 {
        resumed.step()?;
    }
    let a: Vec<Vec<f64>> = straight.state().generator.params().iter().map(|t| t.to_vec()).collect();
    let b: Vec<Vec<f64>> = resumed.state().generator.params().iter().map(|t| t.to_vec()).collect();
    println!("resumed run matches uninterrupted run bit for bit: {}", a == b);
    assert_eq!(a, b);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("checkpoint example failed");
}
