//! Command-line front end: `train`, `synth`, `eval` and `slice-demo`.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when
//! training aborts on a non-finite value.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::dsp::{wav_read, wav_write, MelAnalyzer};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_pairs, parse_metric_list, EvalConfig};
use crate::objectives::RFamily;
use crate::slice_demo::{run_slice_demo, write_slice_demo, SliceDemoConfig};
use crate::trainer::{checkpoint_load, synthesize, TrainConfig, Trainer};

#[derive(Debug, Parser)]
#[command(name = "lssan", version, about = "Sliced adversarial vocoder training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a generator and discriminator bank on synthetic audio.
    Train {
        /// Config file of `key = value` lines; omitted means the desk defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        objective: Option<String>,
        /// Continue from the given checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Vocode the log-mel spectrogram of a WAV file with a trained checkpoint.
    Synth {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, visible_alias = "mel-from")]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score degraded WAVs against references with matching filenames.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        deg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "mstft,mcd,periodicity,vuv_f1")]
        metrics: String,
    },
    /// Learn the projection direction separating two planar Gaussians.
    SliceDemo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_pair, default_value = "2,0", allow_hyphen_values = true)]
        mu1: [f64; 2],
        #[arg(long, value_parser = parse_pair, default_value = "-2,0", allow_hyphen_values = true)]
        mu2: [f64; 2],
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[arg(long, default_value = "ls-san")]
        family: String,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|e| format!("{a}: {e}"))?,
            b.parse().map_err(|e| format!("{b}: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got '{s}'")),
    }
}

fn train_config(
    config: Option<PathBuf>,
    seed: Option<u64>,
    steps: Option<u64>,
    family: Option<String>,
    objective: Option<String>,
) -> Result<TrainConfig> {
    let mut cfg = match &config {
        Some(path) => TrainConfig::load(path)?,
        None => TrainConfig::desk(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = steps {
        cfg.steps = s;
    }
    if let Some(f) = family {
        cfg.set("loss.family", &f)?;
    }
    if let Some(o) = objective {
        cfg.set("loss.objective", &o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(
    config: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    steps: Option<u64>,
    family: Option<String>,
    objective: Option<String>,
    resume: Option<PathBuf>,
) -> Result<()> {
    let mut trainer = match resume {
        Some(ckpt) => {
            let mut state = checkpoint_load(&ckpt)?;
            if let Some(s) = steps {
                state.config.steps = s;
            }
            if config.is_some() || seed.is_some() || family.is_some() || objective.is_some() {
                log::warn!("resuming: only --steps overrides the checkpoint's config");
            }
            Trainer::from_state(state)?
        }
        None => Trainer::new(train_config(config, seed, steps, family, objective)?)?,
    };
    println!("# resolved config\n{}", trainer.config().to_text());
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    std::fs::write(out.join("config.txt"), trainer.config().to_text()).map_err(|e| Error::io(&out, e))?;
    let history = trainer.run(Some(&out))?;
    if let Some(last) = history.last() {
        println!(
            "step {} d_loss {:.5} g_loss {:.5} mel {:.5}",
            last.step, last.d_loss, last.g_loss, last.mel
        );
    }
    Ok(())
}

fn cmd_synth(checkpoint: PathBuf, wav: PathBuf, out: PathBuf) -> Result<()> {
    let state = checkpoint_load(&checkpoint)?;
    println!("# resolved config\n{}", state.config.to_text());
    let input = wav_read(&wav)?;
    let sr = state.config.audio.sample_rate;
    if input.sample_rate() != sr {
        return Err(Error::invalid(
            "synth",
            format!(
                "{} is sampled at {} Hz but the checkpoint expects {sr} Hz",
                wav.display(),
                input.sample_rate()
            ),
        ));
    }
    let analyzer = MelAnalyzer::new(state.config.audio)?;
    let y = synthesize(&state.generator, &analyzer, &input)?;
    wav_write(&out, &y)?;
    println!("wrote {} ({} samples at {sr} Hz)", out.display(), y.len());
    Ok(())
}

fn cmd_eval(reference: PathBuf, deg: PathBuf, out: PathBuf, metrics: String) -> Result<()> {
    let cfg = EvalConfig {
        metrics: parse_metric_list(&metrics)?,
        ..EvalConfig::default()
    };
    println!(
        "# metrics = {}",
        cfg.metrics.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
    );
    let report = evaluate_pairs(&reference, &deg, &cfg)?;
    for name in &report.unmatched {
        eprintln!("warning: {name} has no counterpart, skipped");
    }
    for (name, why) in &report.skipped {
        eprintln!("warning: {name} skipped: {why}");
    }
    report.write_csv(&out)?;
    let avg: Vec<String> = report
        .metrics
        .iter()
        .zip(&report.macro_avg)
        .map(|(m, v)| format!("{m}={v:.6}"))
        .collect();
    println!("{} files, macro average: {}", report.file_count(), avg.join(" "));
    Ok(())
}

fn cmd_slice_demo(
    out: PathBuf,
    mu1: [f64; 2],
    mu2: [f64; 2],
    steps: usize,
    family: String,
    n: usize,
    seed: u64,
) -> Result<()> {
    let family: RFamily = family.parse()?;
    let cfg = SliceDemoConfig {
        mu1,
        mu2,
        n,
        steps,
        family,
        seed,
        ..SliceDemoConfig::default()
    };
    println!("# resolved config\n{cfg:?}");
    let report = run_slice_demo(&cfg)?;
    write_slice_demo(&report, &out)?;
    match report.cosine {
        Some(c) => println!(
            "omega = ({:.5}, {:.5}) oracle = ({:.5}, {:.5}) |cos| = {c:.6}",
            report.omega[0], report.omega[1], report.oracle[0], report.oracle[1]
        ),
        None => eprintln!("warning: direction undefined for mu1 = mu2; cosine check skipped"),
    }
    println!(
        "least-squares GAN direction (unnormalized): ({:.5}, {:.5})",
        report.gan_direction[0], report.gan_direction[1]
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            steps,
            family,
            objective,
            resume,
        } => cmd_train(config, out, seed, steps, family, objective, resume),
        Command::Synth { checkpoint, wav, out } => cmd_synth(checkpoint, wav, out),
        Command::Eval {
            reference,
            deg,
            out,
            metrics,
        } => cmd_eval(reference, deg, out, metrics),
        Command::SliceDemo {
            out,
            mu1,
            mu2,
            steps,
            family,
            n,
            seed,
        } => cmd_slice_demo(out, mu1, mu2, steps, family, n, seed),
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
