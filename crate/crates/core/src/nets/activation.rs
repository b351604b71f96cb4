//! Periodic activations with per-channel trainable parameters.

use crate::error::{Error, Result};
use crate::grad::{CustomOp, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// `x + sin²(αx)/α` with `α = exp(a)`.
    Snake,
    /// `x + e^{−β}·sin²(e^{α}x)`.
    SnakeBeta,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Snake => "snake",
            ActivationKind::SnakeBeta => "snakebeta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "snake" => Some(ActivationKind::Snake),
            "snakebeta" => Some(ActivationKind::SnakeBeta),
            _ => None,
        }
    }
}

fn check_channels(op: &'static str, x: &Tensor, p: &Tensor) -> Result<(usize, usize)> {
    if x.rank() != 2 || p.shape() != [x.shape()[0]] {
        return Err(Error::ShapeMismatch {
            op,
            lhs: x.shape().to_vec(),
            rhs: p.shape().to_vec(),
        });
    }
    Ok((x.shape()[0], x.shape()[1]))
}

/// Snake on `[C×T]` with per-channel log-frequency `log_alpha` `[C]`.
pub fn snake(x: &Tensor, log_alpha: &Tensor) -> Result<Tensor> {
    let (c, t) = check_channels("snake", x, log_alpha)?;
    let xd = x.data();
    let la = log_alpha.data();
    let mut out = vec![0.0; c * t];
    for ch in 0..c {
        let alpha = la[ch].exp();
        for (o, &v) in out[ch * t..(ch + 1) * t].iter_mut().zip(&xd[ch * t..(ch + 1) * t]) {
            let s = (alpha * v).sin();
            *o = v + s * s / alpha;
        }
    }
    drop((xd, la));
    Tensor::from_custom(out, &[c, t], vec![x.clone(), log_alpha.clone()], Box::new(SnakeOp))
}

struct SnakeOp;

impl CustomOp for SnakeOp {
    fn name(&self) -> &'static str {
        "snake"
    }

    fn backward(&self, parents: &[Tensor], _output: &[f64], g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (x, la) = (&parents[0], &parents[1]);
        let (c, t) = (x.shape()[0], x.shape()[1]);
        let xd = x.data();
        let lad = la.data();
        let mut gx = vec![0.0; c * t];
        let mut ga = vec![0.0; c];
        for ch in 0..c {
            let alpha = lad[ch].exp();
            let mut acc = 0.0;
            for i in ch * t..(ch + 1) * t {
                let v = xd[i];
                let (s, co) = (alpha * v).sin_cos();
                let s2 = 2.0 * s * co;
                gx[i] = g[i] * (1.0 + s2);
                // d/dα = x·sin(2αx)/α − sin²(αx)/α², and dα/da = α
                acc += g[i] * (v * s2 - s * s / alpha);
            }
            ga[ch] = acc;
        }
        vec![x.requires_grad().then_some(gx), la.requires_grad().then_some(ga)]
    }
}

/// Snakebeta on `[C×T]` with per-channel log-scale `alpha` and `beta` `[C]`.
pub fn snakebeta(x: &Tensor, alpha: &Tensor, beta: &Tensor) -> Result<Tensor> {
    let (c, t) = check_channels("snakebeta", x, alpha)?;
    check_channels("snakebeta", x, beta)?;
    let xd = x.data();
    let (ad, bd) = (alpha.data(), beta.data());
    let mut out = vec![0.0; c * t];
    for ch in 0..c {
        let freq = ad[ch].exp();
        let amp = (-bd[ch]).exp();
        for (o, &v) in out[ch * t..(ch + 1) * t].iter_mut().zip(&xd[ch * t..(ch + 1) * t]) {
            let s = (freq * v).sin();
            *o = v + amp * s * s;
        }
    }
    drop((xd, ad, bd));
    Tensor::from_custom(
        out,
        &[c, t],
        vec![x.clone(), alpha.clone(), beta.clone()],
        Box::new(SnakeBetaOp),
    )
}

struct SnakeBetaOp;

impl CustomOp for SnakeBetaOp {
    fn name(&self) -> &'static str {
        "snakebeta"
    }

    fn backward(&self, parents: &[Tensor], _output: &[f64], g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (x, a, b) = (&parents[0], &parents[1], &parents[2]);
        let (c, t) = (x.shape()[0], x.shape()[1]);
        let xd = x.data();
        let (ad, bd) = (a.data(), b.data());
        let mut gx = vec![0.0; c * t];
        let mut ga = vec![0.0; c];
        let mut gb = vec![0.0; c];
        for ch in 0..c {
            let freq = ad[ch].exp();
            let amp = (-bd[ch]).exp();
            let (mut acc_a, mut acc_b) = (0.0, 0.0);
            for i in ch * t..(ch + 1) * t {
                let v = xd[i];
                let (s, co) = (freq * v).sin_cos();
                let s2 = 2.0 * s * co;
                gx[i] = g[i] * (1.0 + amp * s2 * freq);
                acc_a += g[i] * amp * s2 * freq * v;
                acc_b -= g[i] * amp * s * s;
            }
            ga[ch] = acc_a;
            gb[ch] = acc_b;
        }
        vec![
            x.requires_grad().then_some(gx),
            a.requires_grad().then_some(ga),
            b.requires_grad().then_some(gb),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::gradient_check;
    use std::f64::consts::PI;

    #[test]
    fn snake_closed_forms() {
        let x = Tensor::new(vec![0.0, PI / 2.0], &[1, 2]).unwrap();
        let a = Tensor::new(vec![0.0], &[1]).unwrap();
        let y = snake(&x, &a).unwrap().to_vec();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - (PI / 2.0 + 1.0)).abs() < 1e-12);
        assert!((y[1] - 2.570796).abs() < 1e-6);
        for la in [-2.0, 0.3, 4.0] {
            let z = snake(&Tensor::zeros(&[1, 1]), &Tensor::new(vec![la], &[1]).unwrap()).unwrap();
            assert_eq!(z.item(), 0.0);
        }
    }

    #[test]
    fn snakebeta_closed_forms() {
        let x = Tensor::new(vec![PI / 4.0, 0.0, 0.7], &[1, 3]).unwrap();
        let zero = Tensor::new(vec![0.0], &[1]).unwrap();
        let y = snakebeta(&x, &zero, &zero).unwrap().to_vec();
        assert!((y[0] - (PI / 4.0 + 0.5)).abs() < 1e-12);
        assert!((y[0] - 1.285398).abs() < 1e-6);
        assert_eq!(y[1], 0.0);
        let big_beta = Tensor::new(vec![40.0], &[1]).unwrap();
        let y = snakebeta(&x, &zero, &big_beta).unwrap().to_vec();
        for (a, b) in y.iter().zip(x.data().iter()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn snake_matches_primitive_composition_and_fd() {
        let x = Tensor::param(vec![0.3, -1.2, 2.0, 0.8, -0.1, 1.7], &[2, 3]).unwrap();
        let a = Tensor::param(vec![0.2, -0.5], &[2]).unwrap();
        let fused = snake(&x, &a).unwrap();
        let alpha = a.reshape(&[2, 1]).unwrap().exp();
        let composed = x
            .add(&alpha.mul(&x).unwrap().sin().square().div(&alpha).unwrap())
            .unwrap();
        for (p, q) in fused.data().iter().zip(composed.data().iter()) {
            assert!((p - q).abs() < 1e-14);
        }
        let r = gradient_check(
            || Ok(snake(&x, &a)?.square().mean()),
            &[x.clone(), a.clone()],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn snakebeta_gradients() {
        let x = Tensor::param(vec![0.3, -1.2, 2.0, 0.8, -0.1, 1.7], &[2, 3]).unwrap();
        let a = Tensor::param(vec![0.2, -0.5], &[2]).unwrap();
        let b = Tensor::param(vec![-0.3, 0.4], &[2]).unwrap();
        let r = gradient_check(
            || Ok(snakebeta(&x, &a, &b)?.square().mean()),
            &[x.clone(), a.clone(), b.clone()],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn channel_mismatch_rejected() {
        let x = Tensor::zeros(&[2, 3]);
        let a = Tensor::zeros(&[3]);
        assert!(snake(&x, &a).is_err());
    }
}
