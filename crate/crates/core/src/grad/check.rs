//! Central-difference gradient checking.

use super::tensor::{no_grad, Tensor};
use crate::error::Result;

/// Per-parameter outcome of [`gradient_check`].
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub index: usize,
    /// Max over checked elements of `|analytic − numeric| / max(|analytic|, |numeric|, scale_floor)`.
    pub max_rel_error: f64,
    /// Elements where one-sided slopes disagree (kinks); excluded from the max.
    pub kinks: usize,
    pub non_finite: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn kinks(&self) -> usize {
        self.params.iter().map(|p| p.kinks).sum()
    }
}

/// Denominator floor for the relative error; gradients smaller than this
/// are compared in absolute terms.
pub const SCALE_FLOOR: f64 = 1e-3;

/// Compares analytic gradients of `f` against central differences for every
/// element of every tensor in `params`.
///
/// `f` must be deterministic and rebuild its graph on each call. Parameter
/// gradients are cleared before and after the check. NaN or infinite values
/// mark the parameter as failed instead of aborting.
pub fn gradient_check<F>(f: F, params: &[Tensor], eps: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn() -> Result<Tensor>,
{
    gradient_check_against(&f, &f, params, eps, tol)
}

/// Like [`gradient_check`], but differentiates `graph` by backprop and
/// `value` numerically. Used for objectives whose stop-gradients make the
/// backprop gradient of a parameter equal the derivative of a sub-objective.
pub fn gradient_check_against<F, G>(
    graph: F,
    value: G,
    params: &[Tensor],
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: Fn() -> Result<Tensor>,
    G: Fn() -> Result<Tensor>,
{
    params.iter().for_each(Tensor::zero_grad);
    let loss = graph()?;
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();
    params.iter().for_each(Tensor::zero_grad);
    drop(loss);

    let eval = || -> Result<f64> { no_grad(|| value().map(|t| t.item())) };
    let f0 = eval()?;

    let mut checks = Vec::with_capacity(params.len());
    for (pi, p) in params.iter().enumerate() {
        let mut check = ParamCheck {
            index: pi,
            max_rel_error: 0.0,
            kinks: 0,
            non_finite: !f0.is_finite(),
        };
        let base = p.to_vec();
        for i in 0..base.len() {
            let mut probe = base.clone();
            probe[i] = base[i] + eps;
            p.set_data(&probe)?;
            let fp = eval()?;
            probe[i] = base[i] - eps;
            p.set_data(&probe)?;
            let fm = eval()?;
            p.set_data(&base)?;

            let a = analytic[pi][i];
            if !(fp.is_finite() && fm.is_finite() && a.is_finite()) {
                check.non_finite = true;
                continue;
            }
            let fwd = (fp - f0) / eps;
            let bwd = (f0 - fm) / eps;
            if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0) {
                check.kinks += 1;
                continue;
            }
            let num = (fp - fm) / (2.0 * eps);
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(SCALE_FLOOR);
            check.max_rel_error = check.max_rel_error.max(rel);
        }
        checks.push(check);
    }
    let passed = checks.iter().all(|c| !c.non_finite && c.max_rel_error <= tol);
    Ok(GradCheckReport {
        params: checks,
        tolerance: tol,
        passed,
    })
}
