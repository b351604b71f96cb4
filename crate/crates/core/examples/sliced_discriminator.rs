// A two-scale sliced discriminator bank: unit-norm directions, the split
// forward pass, and the SAN gradient partition between features and direction.

use lssan::grad::Tensor;
use lssan::nets::{DiscMode, DiscriminatorBank, DiscriminatorConfig, NamedParams};
use lssan::objectives::{v_san, RFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> lssan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = DiscriminatorConfig {
        channels: vec![4, 8, 8],
        ..DiscriminatorConfig::default()
    };
    let bank = DiscriminatorBank::new(2, cfg, &mut rng)?;
    println!("{} scales, {} parameters", bank.scales(), bank.num_params());

    let wave = |f: f64| Tensor::from_vec((0..1024).map(|i| 0.5 * (f * i as f64 / 1024.0).sin()).collect());
    let (real, fake) = (vec![wave(90.0)], vec![wave(37.0)]);
    for (k, out) in bank.forward(&real[0], DiscMode::Plain)?.iter().enumerate() {
        println!(
            "scale {k}: {} logits, {} feature maps, |omega| = {:.9}",
            out.logits.numel(),
            out.features.len(),
            bank.discriminators()[k].omega_norm()
        );
    }

    // Directions only receive gradient from the R3 terms, convolutions only
    // from the R1/R2 terms.
    let loss = v_san(&bank, &real, &fake, RFamily::LsSan)?;
    loss.backward()?;
    println!("v_san = {:.6}", loss.item());
    for (name, t) in bank.named_params() {
        if name.ends_with("direction") || name.ends_with("conv0.weight") {
            let g = t.grad().unwrap_or_default();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("  |grad {name}| = {norm:.3e}");
        }
    }
    bank.zero_grad();
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sliced discriminator example failed");
}
