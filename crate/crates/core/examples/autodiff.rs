// Build a small expression graph, backpropagate, and confirm the gradients
// with central differences.

use lssan::grad::{gradient_check, stop_gradient, Tensor};

pub fn run_example() -> lssan::Result<()> {
    let x = Tensor::param(vec![0.5, -1.0, 2.0], &[3])?;
    let w = Tensor::param(vec![0.3, 0.1, -0.2], &[3])?;

    // loss = mean(softplus(w * x)) + sum(tanh(x)^2)
    let loss = || -> lssan::Result<Tensor> {
        let a = w.mul(&x)?.softplus().mean();
        let b = x.tanh().square().sum();
        a.add(&b)
    };
    let l = loss()?;
    l.backward()?;
    println!("loss = {:.6}", l.item());
    println!("dL/dx = {:?}", x.grad().unwrap_or_default());
    println!("dL/dw = {:?}", w.grad().unwrap_or_default());

    let report = gradient_check(loss, &[x.clone(), w.clone()], 1e-5, 1e-4)?;
    println!(
        "gradient check passed: {} (max rel err {:.2e})",
        report.passed,
        report.max_rel_error()
    );
    assert!(report.passed);

    // stop_gradient keeps the value but blocks the derivative
    x.zero_grad();
    let y = stop_gradient(&x).mul(&x)?.sum();
    y.backward()?;
    println!("d/dx sum(sg(x)*x) = {:?} (equals x)", x.grad().unwrap_or_default());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("autodiff example failed");
}
