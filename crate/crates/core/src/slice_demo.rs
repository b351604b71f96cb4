//! Optimal-direction experiment on two Gaussians in the plane.
//!
//! The feature map is the identity on ℝ², so the discriminator is just the
//! projection `ω·x`. Gradient ascent on the direction part of the sliced
//! objective is compared with a brute-force scan over unit directions, and an
//! unnormalized least-squares direction is trained alongside for reference.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grad::Tensor;
use crate::nets::normalize_direction;
use crate::objectives::{RFamily, Which};
use crate::trainer::Adam;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceDemoConfig {
    pub mu1: [f64; 2],
    pub mu2: [f64; 2],
    /// Samples per Gaussian.
    pub n: usize,
    pub steps: usize,
    pub lr: f64,
    pub family: RFamily,
    pub seed: u64,
    /// Number of equally spaced directions in the brute-force scan.
    pub grid: usize,
}

impl Default for SliceDemoConfig {
    fn default() -> Self {
        Self {
            mu1: [2.0, 0.0],
            mu2: [-2.0, 0.0],
            n: 4096,
            steps: 300,
            lr: 0.05,
            family: RFamily::LsSan,
            seed: 0,
            grid: 3600,
        }
    }
}

/// One row of a direction trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionStep {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceDemoReport {
    pub config: SliceDemoConfig,
    pub trajectory: Vec<DirectionStep>,
    /// Unnormalized least-squares GAN direction, for comparison.
    pub gan_trajectory: Vec<DirectionStep>,
    pub omega: [f64; 2],
    pub oracle: [f64; 2],
    pub oracle_objective: f64,
    /// Difference of the r₃-reweighted sample means, normalized.
    pub tilted: [f64; 2],
    /// `|cos(ω, oracle)|`; `None` when the means coincide.
    pub cosine: Option<f64>,
    pub gan_direction: [f64; 2],
}

impl SliceDemoReport {
    pub fn degenerate(&self) -> bool {
        self.cosine.is_none()
    }
}

fn gaussian(mu: [f64; 2], n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            [mu[0] + a, mu[1] + b]
        })
        .collect()
}

fn project(points: &[[f64; 2]], d: [f64; 2]) -> impl Iterator<Item = f64> + '_ {
    points.iter().map(move |p| p[0] * d[0] + p[1] * d[1])
}

/// Direction part of the sliced objective: `−E R₃(ω·x_real) + E R₃(ω·x_fake)`.
pub fn direction_objective(family: RFamily, omega: [f64; 2], real: &[[f64; 2]], fake: &[[f64; 2]]) -> f64 {
    let mean = |pts: &[[f64; 2]]| {
        project(pts, omega)
            .map(|z| family.eval_scalar(Which::R3, z))
            .sum::<f64>()
            / pts.len() as f64
    };
    mean(fake) - mean(real)
}

/// Best of `grid` equally spaced unit directions and its objective.
pub fn brute_force_direction(family: RFamily, real: &[[f64; 2]], fake: &[[f64; 2]], grid: usize) -> ([f64; 2], f64) {
    (0..grid)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / grid as f64;
            let d = [a.cos(), a.sin()];
            (d, direction_objective(family, d, real, fake))
        })
        .fold(
            ([1.0, 0.0], f64::NEG_INFINITY),
            |best, c| if c.1 > best.1 { c } else { best },
        )
}

/// `E_p̃[x]` under weights `|r₃(ω·x)|` normalized over the batch.
fn tilted_mean(family: RFamily, omega: [f64; 2], pts: &[[f64; 2]]) -> [f64; 2] {
    let w: Vec<f64> = project(pts, omega)
        .map(|z| family.eval_scalar(Which::DR3, z).abs())
        .collect();
    let total: f64 = w.iter().sum();
    let mut m = [0.0; 2];
    for (p, wi) in pts.iter().zip(&w) {
        m[0] += wi * p[0] / total;
        m[1] += wi * p[1] / total;
    }
    m
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        v
    }
}

fn as_tensor(pts: &[[f64; 2]]) -> Result<Tensor> {
    Tensor::new(pts.iter().flatten().copied().collect(), &[pts.len(), 2])
}

fn ascend(
    steps: usize,
    lr: f64,
    init: [f64; 2],
    normalize: bool,
    objective: impl Fn(&Tensor) -> Result<Tensor>,
) -> Result<(Vec<DirectionStep>, [f64; 2])> {
    let w = Tensor::param(init.to_vec(), &[2, 1])?;
    let named = vec![("w".to_string(), w.clone())];
    let mut adam = Adam::new(&named, 0.9, 0.999);
    let mut traj = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let d = if normalize { normalize_direction(&w)? } else { w.clone() };
        let obj = objective(&d)?;
        let dv = d.to_vec();
        traj.push(DirectionStep {
            step,
            x: dv[0],
            y: dv[1],
            objective: obj.item(),
        });
        if step == steps {
            break;
        }
        obj.neg().backward()?;
        adam.step(&named, lr, step as u64 + 1)?;
    }
    let last = *traj.last().expect("at least one row");
    Ok((traj, [last.x, last.y]))
}

/// Trains the direction, scans the oracle grid and reweights the samples.
pub fn run_slice_demo(cfg: &SliceDemoConfig) -> Result<SliceDemoReport> {
    cfg.family.require_san_valid()?;
    if cfg.n == 0 || cfg.grid == 0 {
        return Err(Error::invalid(
            "slice_demo",
            "need at least one sample and one grid direction",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let real = gaussian(cfg.mu1, cfg.n, &mut rng);
    let fake = gaussian(cfg.mu2, cfg.n, &mut rng);
    let init = unit([StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]);
    let (xr, xf) = (as_tensor(&real)?, as_tensor(&fake)?);

    let family = cfg.family;
    let (trajectory, omega) = ascend(cfg.steps, cfg.lr, init, true, |d| {
        let r = family.r3(&xr.matmul(d)?).mean();
        let f = family.r3(&xf.matmul(d)?).mean();
        f.sub(&r)
    })?;
    let gan = RFamily::LsGan;
    let (gan_trajectory, gan_direction) = ascend(cfg.steps, cfg.lr, init, false, |d| {
        gan.r1(&xr.matmul(d)?).mean().add(&gan.r2(&xf.matmul(d)?).mean())
    })?;

    let (oracle, oracle_objective) = brute_force_direction(family, &real, &fake, cfg.grid);
    let (tr, tf) = (tilted_mean(family, omega, &real), tilted_mean(family, omega, &fake));
    let tilted = unit([tr[0] - tf[0], tr[1] - tf[1]]);
    let cosine = if cfg.mu1 == cfg.mu2 {
        log::warn!("mu1 equals mu2: direction undefined, cosine check skipped");
        None
    } else {
        Some((omega[0] * oracle[0] + omega[1] * oracle[1]).abs())
    };
    Ok(SliceDemoReport {
        config: cfg.clone(),
        trajectory,
        gan_trajectory,
        omega,
        oracle,
        oracle_objective,
        tilted,
        cosine,
        gan_direction,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn trajectory_rows(t: &[DirectionStep]) -> impl Iterator<Item = Vec<String>> + '_ {
    t.iter().map(|s| {
        vec![
            s.step.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.objective.to_string(),
        ]
    })
}

/// Writes `directions.csv`, `gan_directions.csv` and `summary.csv`.
pub fn write_slice_demo(report: &SliceDemoReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(
        &dir.join("directions.csv"),
        &["step", "omega_x", "omega_y", "objective"],
        trajectory_rows(&report.trajectory),
    )?;
    write_rows(
        &dir.join("gan_directions.csv"),
        &["step", "w_x", "w_y", "objective"],
        trajectory_rows(&report.gan_trajectory),
    )?;
    let c = &report.config;
    let f = |v: f64| v.to_string();
    let row = vec![
        c.family.name().to_string(),
        f(c.mu1[0]),
        f(c.mu1[1]),
        f(c.mu2[0]),
        f(c.mu2[1]),
        f(report.omega[0]),
        f(report.omega[1]),
        f(report.oracle[0]),
        f(report.oracle[1]),
        report.cosine.map_or_else(|| "skipped".to_string(), f),
        f(report.tilted[0]),
        f(report.tilted[1]),
        f(report.gan_direction[0]),
        f(report.gan_direction[1]),
    ];
    write_rows(
        &dir.join("summary.csv"),
        &[
            "family", "mu1_x", "mu1_y", "mu2_x", "mu2_y", "omega_x", "omega_y", "oracle_x", "oracle_y", "cosine",
            "tilted_x", "tilted_y", "gan_x", "gan_y",
        ],
        [row],
    )
}
